//! Dense statevector simulation.
//!
//! Qubit ordering is little-endian: qubit `q` is bit `q` of the amplitude
//! index, and qubit 0 is the least significant bit of every measured outcome.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::gate::{validate_placement, GateMatrix, Matrix2, Matrix4};
use crate::circuits::Gate;
use crate::error::{Error, Result};
use crate::rng::RngSeed;

pub const MAX_QUBITS: usize = 24;

/// The `2^n` complex amplitudes of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn new_zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::Size(n_qubits));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Index(format!("basis index {index} out of range for {n_qubits} qubits")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Wrap explicit amplitudes. The length must be a power of two and the
    /// norm must be 1 within 1e-9.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Input(format!("amplitude count {dim} is not a power of two >= 2")));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::Size(n_qubits));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Input(format!("state is not normalized (norm² = {norm})")));
        }
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|⟨self|other⟩|`, which is 1 exactly when the states agree up to global phase.
    pub fn overlap(&self, other: &StateVector) -> f64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm()
    }

    /// Largest entrywise distance after removing the best global phase.
    pub fn max_abs_diff_up_to_phase(&self, other: &StateVector) -> f64 {
        let inner: Complex64 = self.amps.iter().zip(&other.amps).map(|(a, b)| b.conj() * a).sum();
        let phase = if inner.norm() > 0.0 { inner / inner.norm() } else { Complex64::new(1.0, 0.0) };
        self.amps.iter().zip(&other.amps).map(|(a, b)| (a - phase * b).norm()).fold(0.0, f64::max)
    }

    /// Apply `gate` to `targets`, conditioned on every qubit in `controls` being `|1⟩`.
    pub fn apply(&mut self, gate: &Gate, targets: &[usize], controls: &[usize]) -> Result<()> {
        validate_placement(self.n_qubits, gate, targets, controls)?;
        let cmask = controls.iter().fold(0usize, |m, &c| m | (1 << c));
        match gate.matrix() {
            GateMatrix::One(m) => apply_1q(&mut self.amps, &m, targets[0], cmask),
            GateMatrix::Two(m) => apply_2q(&mut self.amps, &m, targets[0], targets[1], cmask),
        }
        Ok(())
    }

    /// Born probabilities of every basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Reduced outcome distribution on `subset`; `subset[j]` becomes bit `j`
    /// of the outcome.
    pub fn marginal_probabilities(&self, subset: &[usize]) -> Result<Vec<f64>> {
        self.check_subset(subset)?;
        let mut out = vec![0.0; 1 << subset.len()];
        for (i, a) in self.amps.iter().enumerate() {
            out[gather_bits(i, subset)] += a.norm_sqr();
        }
        Ok(out)
    }

    /// Sample `shots` outcomes on `subset` from the Born distribution.
    pub fn measure_all(&self, subset: &[usize], shots: u64, seed: RngSeed) -> Result<MeasurementDistribution> {
        if shots == 0 {
            return Err(Error::Precondition("shots must be at least 1".into()));
        }
        let probs = self.marginal_probabilities(subset)?;
        let sampler = OutcomeSampler::new(&probs);
        let mut rng = seed.rng();
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            *counts.entry(sampler.sample(rng.random())).or_insert(0u64) += 1;
        }
        MeasurementDistribution::from_counts(1 << subset.len(), counts)
    }

    /// Projectively measure one qubit, collapsing and renormalizing the state.
    pub fn measure_one(&mut self, qubit: usize, seed: RngSeed) -> Result<u8> {
        let u = seed.rng().random::<f64>();
        self.measure_one_with(qubit, u)
    }

    /// Measurement driven by an externally supplied uniform `u ∈ [0, 1)`:
    /// the outcome is 1 when `u >= P(0)`.
    pub fn measure_one_with(&mut self, qubit: usize, u: f64) -> Result<u8> {
        if qubit >= self.n_qubits {
            return Err(Error::Index(format!("qubit {qubit} out of range for {} qubits", self.n_qubits)));
        }
        let bit = 1usize << qubit;
        let p0: f64 = self.amps.iter().enumerate().filter(|(i, _)| i & bit == 0).map(|(_, a)| a.norm_sqr()).sum();
        let outcome = u8::from(u >= p0);
        let keep_prob = if outcome == 0 { p0 } else { 1.0 - p0 };
        let scale = 1.0 / keep_prob.max(f64::MIN_POSITIVE).sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if ((i & bit) != 0) == (outcome == 1) {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(outcome)
    }

    fn check_subset(&self, subset: &[usize]) -> Result<()> {
        if subset.is_empty() {
            return Err(Error::Index("measurement subset is empty".into()));
        }
        let mut seen = 0usize;
        for &q in subset {
            if q >= self.n_qubits {
                return Err(Error::Index(format!("qubit {q} out of range for {} qubits", self.n_qubits)));
            }
            if seen & (1 << q) != 0 {
                return Err(Error::Index(format!("qubit {q} repeated in measurement subset")));
            }
            seen |= 1 << q;
        }
        Ok(())
    }
}

pub(crate) fn gather_bits(index: usize, subset: &[usize]) -> usize {
    subset.iter().enumerate().fold(0, |acc, (j, &q)| acc | (((index >> q) & 1) << j))
}

fn apply_1q(amps: &mut [Complex64], m: &Matrix2, target: usize, cmask: usize) {
    let tb = 1usize << target;
    for i in 0..amps.len() {
        if i & tb != 0 || i & cmask != cmask {
            continue;
        }
        let j = i | tb;
        let (a, b) = (amps[i], amps[j]);
        amps[i] = m[0][0] * a + m[0][1] * b;
        amps[j] = m[1][0] * a + m[1][1] * b;
    }
}

fn apply_2q(amps: &mut [Complex64], m: &Matrix4, t0: usize, t1: usize, cmask: usize) {
    let (b0, b1) = (1usize << t0, 1usize << t1);
    for i in 0..amps.len() {
        if i & (b0 | b1) != 0 || i & cmask != cmask {
            continue;
        }
        let idx = [i, i | b0, i | b1, i | b0 | b1];
        let v = idx.map(|k| amps[k]);
        for (r, &k) in idx.iter().enumerate() {
            amps[k] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
        }
    }
}

/// Inverse-CDF sampler over a finite outcome set.
#[derive(Debug, Clone)]
pub(crate) struct OutcomeSampler {
    cdf: Vec<f64>,
}

impl OutcomeSampler {
    pub(crate) fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        OutcomeSampler { cdf }
    }

    /// Outcome for uniform `u ∈ [0, 1)`. Rounding slack in the tail maps to
    /// the last outcome with nonzero weight.
    pub(crate) fn sample(&self, u: f64) -> usize {
        let total = *self.cdf.last().unwrap_or(&1.0);
        let x = u * total;
        let k = self.cdf.partition_point(|&c| c <= x);
        if k < self.cdf.len() {
            return k;
        }
        let last = self.cdf.last().copied().unwrap_or(0.0);
        self.cdf.iter().position(|&c| c >= last).unwrap_or(0)
    }
}

/// Empirical outcome frequencies of a register, `P(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementDistribution {
    n_outcomes: usize,
    frequencies: BTreeMap<usize, f64>,
    shots: u64,
}

impl MeasurementDistribution {
    pub fn from_counts(n_outcomes: usize, counts: BTreeMap<usize, u64>) -> Result<Self> {
        let shots: u64 = counts.values().sum();
        if shots == 0 {
            return Err(Error::Input("distribution has no shots".into()));
        }
        if let Some((&k, _)) = counts.iter().next_back() {
            if k >= n_outcomes {
                return Err(Error::Index(format!("outcome {k} outside 0..{n_outcomes}")));
            }
        }
        let frequencies =
            counts.into_iter().filter(|&(_, c)| c > 0).map(|(k, c)| (k, c as f64 / shots as f64)).collect();
        Ok(MeasurementDistribution { n_outcomes, frequencies, shots })
    }

    /// Build from explicit frequencies; they must sum to 1 within 1e-12.
    pub fn from_frequencies(n_outcomes: usize, freqs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut frequencies = BTreeMap::new();
        for (k, f) in freqs {
            if k >= n_outcomes {
                return Err(Error::Index(format!("outcome {k} outside 0..{n_outcomes}")));
            }
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Input(format!("frequency {f} outside [0, 1]")));
            }
            if f > 0.0 {
                *frequencies.entry(k).or_insert(0.0) += f;
            }
        }
        let total: f64 = frequencies.values().sum();
        if frequencies.is_empty() || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Input(format!("frequencies sum to {total}, expected 1")));
        }
        Ok(MeasurementDistribution { n_outcomes, frequencies, shots: 0 })
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    /// Number of shots behind the frequencies; 0 for hand-built distributions.
    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn frequency(&self, outcome: usize) -> f64 {
        self.frequencies.get(&outcome).copied().unwrap_or(0.0)
    }

    /// Nonzero entries in ascending outcome order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.frequencies.iter().map(|(&k, &f)| (k, f))
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn total_variation(&self, other: &MeasurementDistribution) -> f64 {
        let n = self.n_outcomes.max(other.n_outcomes);
        0.5 * (0..n).map(|k| (self.frequency(k) - other.frequency(k)).abs()).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_state_sizes() {
        assert_eq!(StateVector::new_zero(1).unwrap().amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        let s = StateVector::new_zero(3).unwrap();
        assert_eq!(s.amplitudes().len(), 8);
        assert_eq!(s.amplitudes()[0], c(1.0, 0.0));
        assert!(s.amplitudes()[1..].iter().all(|a| *a == c(0.0, 0.0)));
        assert_eq!(StateVector::new_zero(0), Err(Error::Size(0)));
        assert_eq!(StateVector::new_zero(25), Err(Error::Size(25)));
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = StateVector::new_zero(1).unwrap();
        s.apply(&Gate::H, &[0], &[]).unwrap();
        assert!((s.amplitudes()[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((s.amplitudes()[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn cnot_truth_table() {
        // |10⟩ in ket order q1 q0 with the control (qubit 0) set is index 1.
        let mut s = StateVector::basis(2, 0b01).unwrap();
        s.apply(&Gate::X, &[1], &[0]).unwrap();
        assert_eq!(s.probabilities(), vec![0.0, 0.0, 0.0, 1.0]);
        let mut off = StateVector::basis(2, 0b10).unwrap();
        off.apply(&Gate::X, &[1], &[0]).unwrap();
        assert_eq!(off.probabilities(), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn rz_two_pi_flips_sign_of_one() {
        let tau = PI;
        let mut s = StateVector::basis(1, 1).unwrap();
        s.apply(&Gate::Rz(2.0 * tau), &[0], &[]).unwrap();
        assert!((s.amplitudes()[1] - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn invalid_placements_are_index_errors() {
        let mut s = StateVector::new_zero(2).unwrap();
        assert!(matches!(s.apply(&Gate::X, &[0], &[0]), Err(Error::Index(_))));
        assert!(matches!(s.apply(&Gate::X, &[2], &[]), Err(Error::Index(_))));
        assert!(matches!(s.apply(&Gate::H, &[0], &[5]), Err(Error::Index(_))));
    }

    #[test]
    fn measuring_a_basis_state() {
        let s = StateVector::basis(3, 0b101).unwrap();
        let d = s.measure_all(&[0, 1, 2], 17, RngSeed(3)).unwrap();
        assert_eq!(d.frequency(5), 1.0);
        assert_eq!(d.n_outcomes(), 8);
        assert_eq!(d.shots(), 17);
    }

    #[test]
    fn measure_all_preconditions() {
        let s = StateVector::new_zero(2).unwrap();
        assert!(matches!(s.measure_all(&[0], 0, RngSeed(0)), Err(Error::Precondition(_))));
        assert!(matches!(s.measure_all(&[], 10, RngSeed(0)), Err(Error::Index(_))));
        assert!(matches!(s.measure_all(&[0, 0], 10, RngSeed(0)), Err(Error::Index(_))));
    }

    #[test]
    fn plus_state_binomial_concentration() {
        let mut s = StateVector::new_zero(1).unwrap();
        s.apply(&Gate::H, &[0], &[]).unwrap();
        let d = s.measure_all(&[0], 8192, RngSeed(42)).unwrap();
        assert!((d.frequency(0) - 0.5).abs() < 0.02);
        assert!((d.frequency(1) - 0.5).abs() < 0.02);
        let total: f64 = d.iter().map(|(_, f)| f).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measure_one_deterministic_cases() {
        let mut s = StateVector::new_zero(1).unwrap();
        assert_eq!(s.measure_one(0, RngSeed(1)).unwrap(), 0);
        assert_eq!(s, StateVector::new_zero(1).unwrap());

        let mut s = StateVector::basis(2, 0b11).unwrap();
        assert_eq!(s.measure_one(0, RngSeed(1)).unwrap(), 1);
        assert_eq!(s, StateVector::basis(2, 0b11).unwrap());

        assert!(matches!(s.measure_one(2, RngSeed(1)), Err(Error::Index(_))));
    }

    #[test]
    fn measure_one_reproducible_and_collapses() {
        let mut plus = StateVector::new_zero(1).unwrap();
        plus.apply(&Gate::H, &[0], &[]).unwrap();
        for seed in 0..20 {
            let (mut a, mut b) = (plus.clone(), plus.clone());
            let bit = a.measure_one(0, RngSeed(seed)).unwrap();
            assert_eq!(bit, b.measure_one(0, RngSeed(seed)).unwrap());
            assert!((a.probabilities()[bit as usize] - 1.0).abs() < 1e-12);
            // Second measurement sees the collapsed state whatever its uniform is.
            assert_eq!(a.measure_one(0, RngSeed(seed + 1000)).unwrap(), bit);
        }
    }

    #[test]
    fn sampler_skips_zero_weight_tail() {
        let s = OutcomeSampler::new(&[0.5, 0.5, 0.0]);
        assert_eq!(s.sample(0.0), 0);
        assert_eq!(s.sample(0.9999999999999999), 1);
    }

    #[test]
    fn distribution_from_frequencies_checks_sum() {
        assert!(MeasurementDistribution::from_frequencies(8, [(3, 1.0)]).is_ok());
        assert!(MeasurementDistribution::from_frequencies(8, [(3, 0.5)]).is_err());
        assert!(MeasurementDistribution::from_frequencies(8, [(8, 1.0)]).is_err());
    }

    fn arb_op() -> impl Strategy<Value = (Gate, Vec<usize>, Vec<usize>)> {
        let gate = prop_oneof![
            Just(Gate::H),
            Just(Gate::X),
            Just(Gate::Y),
            Just(Gate::Z),
            Just(Gate::S),
            Just(Gate::Sdg),
            (-7.0..7.0f64).prop_map(Gate::Rx),
            (-7.0..7.0f64).prop_map(Gate::Ry),
            (-7.0..7.0f64).prop_map(Gate::Rz),
            (-7.0..7.0f64).prop_map(Gate::Phase),
            Just(Gate::Swap),
        ];
        (gate, Just(vec![0usize, 1, 2, 3]).prop_shuffle(), 0usize..3).prop_map(|(g, qs, nc)| {
            let arity = g.arity();
            let targets = qs[..arity].to_vec();
            let controls = qs[arity..arity + nc.min(4 - arity)].to_vec();
            (g, targets, controls)
        })
    }

    proptest! {
        #[test]
        fn norm_is_preserved(ops in proptest::collection::vec(arb_op(), 0..40)) {
            let mut s = StateVector::new_zero(4).unwrap();
            for (g, t, c) in &ops {
                s.apply(g, t, c).unwrap();
            }
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn born_rule_three_qubits(ops in proptest::collection::vec(arb_op(), 1..12), seed in any::<u64>()) {
            let mut s = StateVector::new_zero(4).unwrap();
            for (g, t, c) in &ops {
                s.apply(g, t, c).unwrap();
            }
            let subset = [0, 1, 2];
            let probs = s.marginal_probabilities(&subset).unwrap();
            let d = s.measure_all(&subset, 100_000, RngSeed(seed)).unwrap();
            for (k, p) in probs.iter().enumerate() {
                prop_assert!((d.frequency(k) - p).abs() < 0.01, "outcome {k}: {} vs {p}", d.frequency(k));
            }
        }
    }
}

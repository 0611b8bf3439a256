//! Phase estimators built on the counting-register circuit.
//!
//! Three readouts are provided:
//!
//! - majority: the most frequent outcome of the base circuit, divided by `2^n`;
//! - circular: the argument of the resultant `Σ P(x) e^{2πi x/2^n}`;
//! - iterative: one counting qubit per circuit, measuring bits from the
//!   highest power of `U` down, with a semiclassical-QFT correction `ω_k`.
//!
//! Phases are in revolutions, `φ ∈ [0, 1)`, with `U|u⟩ = e^{2πiφ}|u⟩`.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::circuits::{
    append_controlled_power, inverse_qft_circuit, wrap_unit, Circuit, Eigenstate, Gate, HeisenbergParams, PowerMode,
};
use crate::error::{Error, Result};
use crate::rng::RngSeed;
use crate::statevector::MeasurementDistribution;

/// Largest counting register supported by the estimators.
pub const MAX_COUNTING_QUBITS: usize = 8;

/// Below this resultant length the circular mean has no meaningful argument.
pub const MIN_RESULTANT: f64 = 1e-12;

/// Phase-estimation procedure. `Base` reads the base circuit by majority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Base,
    Circular,
    Iterative,
    Bayesian,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Base, Method::Circular, Method::Iterative, Method::Bayesian];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Base => "base",
            Method::Circular => "circular",
            Method::Iterative => "iterative",
            Method::Bayesian => "bayesian",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| {
            Error::Input(format!("unknown algorithm `{s}` (expected base, circular, iterative or bayesian)"))
        })
    }
}

/// An estimated phase in revolutions, always in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate {
    pub value: f64,
    pub method: Method,
}

impl PhaseEstimate {
    pub fn new(value: f64, method: Method) -> Self {
        PhaseEstimate { value: wrap_unit(value), method }
    }
}

/// Distance between two phases on the unit circle, in `[0, 1/2]`.
pub fn wrapped_error(a: f64, b: f64) -> f64 {
    wrapped_difference(a, b).abs()
}

/// `a − b` reduced to `[−1/2, 1/2)`.
pub fn wrapped_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    if d >= 0.5 {
        d - 1.0
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountingConfig {
    pub n_counting: usize,
    pub shots: u64,
}

impl Default for CountingConfig {
    fn default() -> Self {
        CountingConfig { n_counting: 3, shots: 8192 }
    }
}

impl CountingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_COUNTING_QUBITS).contains(&self.n_counting) {
            return Err(Error::Input(format!("n_counting = {} outside 1..={MAX_COUNTING_QUBITS}", self.n_counting)));
        }
        if self.shots == 0 {
            return Err(Error::Precondition("shots must be at least 1".into()));
        }
        Ok(())
    }
}

/// Counting qubits `0..n`, state register on `n` and `n + 1`, one classical
/// bit per counting qubit.
pub fn build_base_pea_circuit(
    n_counting: usize,
    params: HeisenbergParams,
    tau: f64,
    eigenstate: Eigenstate,
    powers: PowerMode,
) -> Result<Circuit> {
    if !(1..=MAX_COUNTING_QUBITS).contains(&n_counting) {
        return Err(Error::Input(format!("n_counting = {n_counting} outside 1..={MAX_COUNTING_QUBITS}")));
    }
    let n = n_counting;
    let (a, b) = (n, n + 1);
    let mut c = Circuit::new(n + 2, n);
    for q in 0..n {
        c.h(q);
    }
    eigenstate.append_prep(&mut c, a, b);
    for k in 0..n {
        append_controlled_power(&mut c, params, tau, 1 << k, (a, b), k, powers)?;
    }
    let qubits: Vec<usize> = (0..n).collect();
    c.compose(&inverse_qft_circuit(n)?, &qubits, &[])?;
    for q in 0..n {
        c.measure(q, q)?;
    }
    Ok(c)
}

fn check_outcomes(dist: &MeasurementDistribution, n: usize) -> Result<()> {
    if dist.n_outcomes() != 1 << n {
        return Err(Error::Precondition(format!("distribution has {} outcomes, expected 2^{n}", dist.n_outcomes())));
    }
    if dist.is_empty() {
        return Err(Error::Input("empty distribution".into()));
    }
    Ok(())
}

/// `argmax_x P(x) / 2^n`; ties go to the smallest outcome.
pub fn estimate_majority(dist: &MeasurementDistribution, n: usize) -> Result<PhaseEstimate> {
    check_outcomes(dist, n)?;
    let mut best = (0usize, f64::NEG_INFINITY);
    for (x, p) in dist.iter() {
        if p > best.1 {
            best = (x, p);
        }
    }
    Ok(PhaseEstimate::new(best.0 as f64 / (1u64 << n) as f64, Method::Base))
}

/// `arg(Σ_x P(x) e^{2πi x/2^n}) / 2π`.
pub fn estimate_circular(dist: &MeasurementDistribution, n: usize) -> Result<PhaseEstimate> {
    check_outcomes(dist, n)?;
    let bins = (1u64 << n) as f64;
    let mu: Complex64 = dist.iter().map(|(x, p)| Complex64::from_polar(p, TAU * x as f64 / bins)).sum();
    if mu.norm() < MIN_RESULTANT {
        return Err(Error::UndefinedMean(mu.norm()));
    }
    Ok(PhaseEstimate::new(mu.arg() / TAU, Method::Circular))
}

/// Outcomes of the iterative procedure; `bits[k]` is the bit read by the
/// circuit applying `U^{2^k}`.
///
/// Circuit `k` resolves binary digit `n − 1 − k` of the phase integer, so the
/// `U^{2^{n−1}}` circuit, which runs first, yields the least significant
/// digit and circuit 0 the most significant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitRecord {
    pub bits: Vec<u8>,
}

impl BitRecord {
    pub fn n(&self) -> usize {
        self.bits.len()
    }

    /// The phase integer `j` with `φ̂ = j / 2^n`.
    pub fn outcome(&self) -> usize {
        let n = self.n();
        self.bits.iter().enumerate().fold(0, |acc, (k, &b)| acc | (usize::from(b) << (n - 1 - k)))
    }

    /// Binary digits of [`outcome`](Self::outcome), least significant first.
    pub fn phase_bits(&self) -> Vec<u8> {
        self.bits.iter().rev().copied().collect()
    }

    pub fn phase(&self) -> f64 {
        self.outcome() as f64 / (1u64 << self.n()) as f64
    }
}

/// Semiclassical correction for circuit `k`:
/// `ω_k = −2π Σ_{j=0}^{n−k−2} b_{j+k+1} / 2^{j+2}`, reading only `bits[k+1..]`.
pub fn omega_k(bits: &[u8], k: usize) -> Result<f64> {
    let n = bits.len();
    if k >= n {
        return Err(Error::Index(format!("circuit index {k} out of range for {n} bits")));
    }
    let sum: f64 = bits[k + 1..].iter().enumerate().map(|(j, &b)| f64::from(b) / (1u64 << (j + 2)) as f64).sum();
    Ok(-TAU * sum)
}

/// One-counting-qubit circuit: qubit 0 counts, qubits 1 and 2 hold the
/// eigenstate. `Rz(ω)` sits between the controlled `U^{2^k}` and the final
/// Hadamard.
pub fn build_iterative_circuit(
    k: usize,
    omega: f64,
    params: HeisenbergParams,
    tau: f64,
    eigenstate: Eigenstate,
) -> Result<Circuit> {
    if k >= 63 {
        return Err(Error::Input(format!("power 2^{k} is too large")));
    }
    let mut c = Circuit::new(3, 1);
    c.h(0);
    eigenstate.append_prep(&mut c, 1, 2);
    append_controlled_power(&mut c, params, tau, 1 << k, (1, 2), 0, PowerMode::Merged)?;
    c.push(Gate::Rz(omega), &[0], &[])?;
    c.h(0);
    c.measure(0, 0)?;
    Ok(c)
}

/// Run circuits `k = n−1, …, 0`, each for `cfg.shots` shots, deciding each
/// bit by majority vote (ties read as 0).
pub fn run_iterative(
    cfg: &CountingConfig,
    params: HeisenbergParams,
    tau: f64,
    eigenstate: Eigenstate,
    seed: RngSeed,
    backend: &Backend,
) -> Result<(BitRecord, PhaseEstimate)> {
    cfg.validate()?;
    let n = cfg.n_counting;
    let mut bits = vec![0u8; n];
    for k in (0..n).rev() {
        let omega = omega_k(&bits, k)?;
        let circuit = build_iterative_circuit(k, omega, params, tau, eigenstate)?;
        let dist = backend.run(&circuit, cfg.shots, seed.derive(k as u64))?;
        bits[k] = u8::from(dist.frequency(1) > dist.frequency(0));
    }
    let record = BitRecord { bits };
    let estimate = PhaseEstimate::new(record.phase(), Method::Iterative);
    Ok((record, estimate))
}

/// Phase readout of a base-circuit distribution for `Base` or `Circular`.
pub fn estimate_from_distribution(dist: &MeasurementDistribution, n: usize, method: Method) -> Result<PhaseEstimate> {
    match method {
        Method::Base => estimate_majority(dist, n),
        Method::Circular => estimate_circular(dist, n),
        other => Err(Error::Unsupported(format!("{other} does not read a counting distribution"))),
    }
}

/// Exact outcome distribution of the base circuit (no sampling).
pub fn base_outcome_probabilities(
    n_counting: usize,
    params: HeisenbergParams,
    tau: f64,
    eigenstate: Eigenstate,
) -> Result<Vec<f64>> {
    let c = build_base_pea_circuit(n_counting, params, tau, eigenstate, PowerMode::Merged)?;
    let s = Backend::pre_measurement_state(&c)?;
    s.marginal_probabilities(&(0..n_counting).collect::<Vec<_>>())
}

//! Shot-based circuit execution with an optional stochastic Pauli noise model.
//!
//! Noise is simulated by Monte Carlo trajectories. After every gate, each
//! qubit the gate touches (targets and controls) independently suffers `X`,
//! `Y` or `Z`, each with probability `depolarizing_p / 3`. Idle qubits are
//! left alone. Every measured bit is then flipped with probability
//! `readout_flip_p`.
//!
//! Shot `s` draws all of its randomness from its own ChaCha stream, so a
//! shot's outcome depends only on `(circuit, noise, seed, s)`. A shot whose
//! error draw comes up empty is sampled from the cached noiseless
//! distribution, which is statistically identical to simulating it.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::{Circuit, Gate, Op};
use crate::error::{Error, Result};
use crate::rng::RngSeed;
use crate::statevector::{MeasurementDistribution, OutcomeSampler, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Probability that a touched qubit receives a Pauli error after a gate.
    pub depolarizing_p: f64,
    /// Probability that a measured bit is reported flipped.
    pub readout_flip_p: f64,
}

impl NoiseModel {
    pub fn new(depolarizing_p: f64, readout_flip_p: f64) -> Result<Self> {
        let m = NoiseModel { depolarizing_p, readout_flip_p };
        m.validate()?;
        Ok(m)
    }

    pub fn noiseless() -> Self {
        NoiseModel::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("depolarizing_p", self.depolarizing_p), ("readout_flip_p", self.readout_flip_p)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Input(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.depolarizing_p == 0.0 && self.readout_flip_p == 0.0
    }
}

/// Statevector executor. Outcomes are integers over the circuit's classical
/// bits, clbit 0 least significant.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Backend {
    noise: NoiseModel,
}

struct PauliError {
    op: usize,
    qubit: usize,
    pauli: Gate,
}

/// Noiseless data shared by all shots of one run.
struct Prepared {
    /// `prefix[i]` is the state before op `i`.
    prefix: Vec<StateVector>,
    /// Sampler over the measured qubits, present when measurements are terminal.
    terminal: Option<(Vec<usize>, OutcomeSampler)>,
}

impl Backend {
    pub fn noiseless() -> Self {
        Backend::default()
    }

    pub fn with_noise(noise: NoiseModel) -> Result<Self> {
        noise.validate()?;
        Ok(Backend { noise })
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    /// Run `shots` repetitions and tally the classical register.
    pub fn run(&self, circuit: &Circuit, shots: u64, seed: RngSeed) -> Result<MeasurementDistribution> {
        if shots == 0 {
            return Err(Error::Precondition("shots must be at least 1".into()));
        }
        if circuit.n_clbits() == 0 || !circuit.has_measurements() {
            return Err(Error::Input("circuit measures nothing".into()));
        }
        if circuit.n_clbits() > 24 {
            return Err(Error::Size(circuit.n_clbits()));
        }
        let prepared = self.prepare(circuit)?;
        let mut counts = BTreeMap::new();
        if self.noise.is_noiseless() {
            if let Some((qubits, sampler)) = &prepared.terminal {
                let mut rng = seed.rng();
                for _ in 0..shots {
                    let m = sampler.sample(rng.random());
                    let bits = self.terminal_clbits(circuit, qubits, m, &mut rng);
                    *counts.entry(bits).or_insert(0u64) += 1;
                }
                return MeasurementDistribution::from_counts(1 << circuit.n_clbits(), counts);
            }
        }
        for s in 0..shots {
            let outcome = self.run_shot(circuit, &prepared, seed.shot_rng(s))?;
            *counts.entry(outcome).or_insert(0u64) += 1;
        }
        MeasurementDistribution::from_counts(1 << circuit.n_clbits(), counts)
    }

    /// One shot; convenience for single-measurement procedures.
    pub fn run_once(&self, circuit: &Circuit, seed: RngSeed) -> Result<usize> {
        let d = self.run(circuit, 1, seed)?;
        let outcome = d.iter().next().map(|(k, _)| k);
        outcome.ok_or_else(|| Error::Input("empty single-shot result".into()))
    }

    /// Noiseless state just before the terminal measurements.
    pub fn pre_measurement_state(circuit: &Circuit) -> Result<StateVector> {
        if !circuit.measurements_are_terminal() {
            return Err(Error::Unsupported("circuit measures before its last gate".into()));
        }
        let mut s = StateVector::new_zero(circuit.n_qubits())?;
        for op in circuit.ops() {
            if let Op::Gate { gate, targets, controls } = op {
                s.apply(gate, targets, controls)?;
            }
        }
        Ok(s)
    }

    fn prepare(&self, circuit: &Circuit) -> Result<Prepared> {
        let mut s = StateVector::new_zero(circuit.n_qubits())?;
        let terminal_ok = circuit.measurements_are_terminal();
        let mut prefix = Vec::new();
        let mut measured = Vec::new();
        for op in circuit.ops() {
            if terminal_ok {
                prefix.push(s.clone());
            }
            match op {
                Op::Gate { gate, targets, controls } => {
                    if terminal_ok {
                        s.apply(gate, targets, controls)?;
                    }
                }
                Op::Measure { qubit, .. } => {
                    if !measured.contains(qubit) {
                        measured.push(*qubit);
                    }
                }
            }
        }
        let terminal = if terminal_ok {
            let probs = s.marginal_probabilities(&measured)?;
            Some((measured, OutcomeSampler::new(&probs)))
        } else {
            None
        };
        Ok(Prepared { prefix, terminal })
    }

    /// Map a joint outcome `m` over `qubits` to the classical register,
    /// applying readout flips in measurement order.
    fn terminal_clbits(&self, circuit: &Circuit, qubits: &[usize], m: usize, rng: &mut impl Rng) -> usize {
        let mut bits = 0usize;
        for op in circuit.ops() {
            if let Op::Measure { qubit, clbit } = op {
                let j = qubits.iter().position(|q| q == qubit).expect("measured qubit recorded");
                let v = (m >> j) & 1;
                let v = v ^ usize::from(self.flip(rng));
                bits = (bits & !(1 << clbit)) | (v << clbit);
            }
        }
        bits
    }

    fn flip(&self, rng: &mut impl Rng) -> bool {
        self.noise.readout_flip_p > 0.0 && rng.random::<f64>() < self.noise.readout_flip_p
    }

    fn sample_errors(&self, circuit: &Circuit, rng: &mut impl Rng) -> Vec<PauliError> {
        let p = self.noise.depolarizing_p;
        let mut errors = Vec::new();
        if p == 0.0 {
            return errors;
        }
        for (i, op) in circuit.ops().iter().enumerate() {
            if !matches!(op, Op::Gate { .. }) {
                continue;
            }
            for q in op.touched_qubits() {
                let u: f64 = rng.random();
                if u < p {
                    let pauli = match ((3.0 * u / p) as usize).min(2) {
                        0 => Gate::X,
                        1 => Gate::Y,
                        _ => Gate::Z,
                    };
                    errors.push(PauliError { op: i, qubit: q, pauli });
                }
            }
        }
        errors
    }

    fn run_shot(&self, circuit: &Circuit, prepared: &Prepared, mut rng: impl Rng) -> Result<usize> {
        let errors = self.sample_errors(circuit, &mut rng);
        if let Some((qubits, sampler)) = &prepared.terminal {
            if errors.is_empty() {
                let m = sampler.sample(rng.random());
                return Ok(self.terminal_clbits(circuit, qubits, m, &mut rng));
            }
        }
        let (start, mut state) = match (&prepared.terminal, errors.first()) {
            (Some(_), Some(e)) => (e.op, prepared.prefix[e.op].clone()),
            _ => (0, StateVector::new_zero(circuit.n_qubits())?),
        };
        let mut pending = errors.iter().peekable();
        let mut bits = 0usize;
        for (i, op) in circuit.ops().iter().enumerate().skip(start) {
            match op {
                Op::Gate { gate, targets, controls } => {
                    state.apply(gate, targets, controls)?;
                    while let Some(e) = pending.next_if(|e| e.op == i) {
                        state.apply(&e.pauli, &[e.qubit], &[])?;
                    }
                }
                Op::Measure { qubit, clbit } => {
                    let v = state.measure_one_with(*qubit, rng.random())? as usize;
                    let v = v ^ usize::from(self.flip(&mut rng));
                    bits = (bits & !(1 << clbit)) | (v << clbit);
                }
            }
        }
        Ok(bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::Circuit;

    fn plus_circuit() -> Circuit {
        let mut c = Circuit::new(1, 1);
        c.h(0);
        c.measure(0, 0).unwrap();
        c
    }

    #[test]
    fn probabilities_are_validated() {
        assert!(NoiseModel::new(0.5, 0.0).is_ok());
        assert!(NoiseModel::new(-0.1, 0.0).is_err());
        assert!(NoiseModel::new(0.0, 1.5).is_err());
        assert!(Backend::with_noise(NoiseModel { depolarizing_p: 2.0, readout_flip_p: 0.0 }).is_err());
    }

    #[test]
    fn zero_noise_is_bit_identical_to_noiseless() {
        let c = plus_circuit();
        let a = Backend::noiseless().run(&c, 1000, RngSeed(9)).unwrap();
        let b = Backend::with_noise(NoiseModel::new(0.0, 0.0).unwrap()).unwrap().run(&c, 1000, RngSeed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn full_readout_flip_inverts_zero() {
        let mut c = Circuit::new(1, 1);
        c.measure(0, 0).unwrap();
        let b = Backend::with_noise(NoiseModel::new(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(b.run(&c, 200, RngSeed(1)).unwrap().frequency(1), 1.0);
    }

    #[test]
    fn clbit_mapping_and_terminal_order() {
        // qubit 0 in |1⟩ read into clbit 2, qubit 2 (|0⟩) into clbit 0.
        let mut c = Circuit::new(3, 3);
        c.x(0);
        c.measure(2, 0).unwrap();
        c.measure(0, 2).unwrap();
        let d = Backend::noiseless().run(&c, 10, RngSeed(0)).unwrap();
        assert_eq!(d.frequency(0b100), 1.0);
    }

    #[test]
    fn mid_circuit_measurement_collapses() {
        // Measure |+⟩, then CNOT onto a fresh qubit: both bits always agree.
        let mut c = Circuit::new(2, 2);
        c.h(0);
        c.measure(0, 0).unwrap();
        c.cx(0, 1);
        c.measure(1, 1).unwrap();
        let d = Backend::noiseless().run(&c, 4000, RngSeed(5)).unwrap();
        assert!((d.frequency(0b00) + d.frequency(0b11) - 1.0).abs() < 1e-12);
        assert!((d.frequency(0b11) - 0.5).abs() < 0.03);
    }

    #[test]
    fn full_depolarizing_randomizes_a_basis_state() {
        // p = 1 on an X gate: {X,Y,Z}·X|0⟩ gives |0⟩ w.p. 2/3 and |1⟩ w.p. 1/3.
        let mut c = Circuit::new(1, 1);
        c.x(0);
        c.measure(0, 0).unwrap();
        let b = Backend::with_noise(NoiseModel::new(1.0, 0.0).unwrap()).unwrap();
        let d = b.run(&c, 30_000, RngSeed(3)).unwrap();
        assert!((d.frequency(0) - 2.0 / 3.0).abs() < 0.015);
    }

    #[test]
    fn idle_qubits_are_not_touched() {
        let mut c = Circuit::new(2, 1);
        c.x(0);
        c.measure(1, 0).unwrap();
        let b = Backend::with_noise(NoiseModel::new(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(b.run(&c, 500, RngSeed(3)).unwrap().frequency(0), 1.0);
    }

    #[test]
    fn noisy_runs_are_seed_deterministic() {
        let mut c = Circuit::new(2, 2);
        c.h(0).cx(0, 1).rz(0.3, 1).h(1);
        c.measure(0, 0).unwrap();
        c.measure(1, 1).unwrap();
        let b = Backend::with_noise(NoiseModel::new(0.2, 0.05).unwrap()).unwrap();
        assert_eq!(b.run(&c, 3000, RngSeed(77)).unwrap(), b.run(&c, 3000, RngSeed(77)).unwrap());
        assert_ne!(b.run(&c, 3000, RngSeed(77)).unwrap(), b.run(&c, 3000, RngSeed(78)).unwrap());
    }

    #[test]
    fn run_rejects_bad_requests() {
        let c = plus_circuit();
        assert!(matches!(Backend::noiseless().run(&c, 0, RngSeed(0)), Err(Error::Precondition(_))));
        let mut nothing = Circuit::new(1, 1);
        nothing.h(0);
        assert!(Backend::noiseless().run(&nothing, 10, RngSeed(0)).is_err());
    }
}

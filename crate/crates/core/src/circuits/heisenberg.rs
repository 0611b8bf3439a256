//! The two-spin Heisenberg exchange Hamiltonian `H = (λ/4)(XX + YY + ZZ)`
//! and its time evolution `U(τ) = exp(−iHτ)`.
//!
//! The three Pauli products commute, so `U(τ)` factors exactly into
//! `exp(−iαYY) · exp(−iα(XX + ZZ))` with `α = λτ/4`. Each factor is a single
//! rotation by `2α = λτ/2` sandwiched between two-qubit Cliffords:
//!
//! ```text
//! exp(−iα YY)        = CY(a→b) · Ry_a(2α) · CY(a→b)
//! exp(−iα (XX + ZZ)) = CX(a→b) · Rx_a(2α) Rz_b(2α) · CX(a→b)
//! ```
//!
//! The Clifford pairs cancel when the rotations are trivial, so a controlled
//! `U(τ)` only needs its three rotations controlled.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::gate::Gate;
use super::ir::Circuit;
use super::unitary::UnitaryMatrix;
use crate::error::{Error, Result};

/// Interaction strength `λ` (energy units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergParams {
    pub lambda: f64,
}

impl HeisenbergParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::Input(format!("lambda must be finite, got {lambda}")));
        }
        Ok(HeisenbergParams { lambda })
    }

    /// Rotation angle used by the decomposed evolution, `λτ/2`.
    pub fn rotation_angle(&self, tau: f64) -> f64 {
        self.lambda * tau / 2.0
    }
}

impl Default for HeisenbergParams {
    fn default() -> Self {
        HeisenbergParams { lambda: 4.0 }
    }
}

/// The four eigenstates of the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eigenstate {
    /// `(|01⟩ + |10⟩)/√2`, energy `λ/4`.
    #[default]
    TripletZero,
    /// `|00⟩`, energy `λ/4`.
    TripletUp,
    /// `|11⟩`, energy `λ/4`.
    TripletDown,
    /// `(|01⟩ − |10⟩)/√2`, energy `−3λ/4`.
    Singlet,
}

impl Eigenstate {
    pub const ALL: [Eigenstate; 4] =
        [Eigenstate::TripletZero, Eigenstate::TripletUp, Eigenstate::TripletDown, Eigenstate::Singlet];

    pub fn energy(self, params: HeisenbergParams) -> f64 {
        match self {
            Eigenstate::Singlet => -0.75 * params.lambda,
            _ => 0.25 * params.lambda,
        }
    }

    /// Phase `φ ∈ [0, 1)` with `U(τ)|u⟩ = e^{2πiφ}|u⟩`, i.e. `(−ετ/2π) mod 1`.
    pub fn phase(self, params: HeisenbergParams, tau: f64) -> f64 {
        wrap_unit(-self.energy(params) * tau / TAU)
    }

    /// Amplitudes on two qubits, little-endian.
    pub fn amplitudes(self) -> [Complex64; 4] {
        let z = Complex64::new(0.0, 0.0);
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let one = Complex64::new(1.0, 0.0);
        match self {
            Eigenstate::TripletZero => [z, h, h, z],
            Eigenstate::TripletUp => [one, z, z, z],
            Eigenstate::TripletDown => [z, z, z, one],
            // index 1 is a=1,b=0; index 2 is a=0,b=1
            Eigenstate::Singlet => [z, -h, h, z],
        }
    }

    /// Append the gates preparing this eigenstate from `|00⟩` on `(a, b)`.
    pub fn append_prep(self, c: &mut Circuit, a: usize, b: usize) {
        match self {
            Eigenstate::TripletZero => {
                c.h(a).cx(a, b).x(b);
            }
            Eigenstate::TripletUp => {}
            Eigenstate::TripletDown => {
                c.x(a).x(b);
            }
            Eigenstate::Singlet => {
                c.x(a).h(a).cx(a, b).x(b);
            }
        }
    }

    /// Preparation circuit on two qubits.
    pub fn prep_circuit(self) -> Circuit {
        let mut c = Circuit::new(2, 0);
        self.append_prep(&mut c, 0, 1);
        c
    }
}

/// Map a real number into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        // normalises -0.0
        r + 0.0
    }
}

/// `(λ/4)(X⊗X + Y⊗Y + Z⊗Z)` as a 4×4 Hermitian matrix.
pub fn heisenberg_hamiltonian(params: HeisenbergParams) -> DMatrix<Complex64> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let x = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
    let y = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
    let z = DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
    let sum = x.kronecker(&x) + y.kronecker(&y) + z.kronecker(&z);
    sum * c(params.lambda / 4.0, 0.0)
}

/// `exp(−iHτ)` from the eigen-decomposition of `H`.
pub fn exact_time_evolution(params: HeisenbergParams, tau: f64) -> UnitaryMatrix {
    let h = heisenberg_hamiltonian(params);
    let eig = h.symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| Complex64::from_polar(1.0, -e * tau)));
    let v = &eig.eigenvectors;
    UnitaryMatrix::new(v * phases * v.adjoint()).expect("4x4 is a valid register size")
}

/// How `U^p` is compiled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMode {
    /// One `U(p·τ)` block; exact because the Hamiltonian terms commute.
    #[default]
    Merged,
    /// `p` consecutive `U(τ)` blocks, as in the textbook circuit.
    Repeated,
}

/// Append `U(τ)` on the state pair `(a, b)`, optionally controlled.
pub fn append_evolution(
    c: &mut Circuit,
    params: HeisenbergParams,
    tau: f64,
    a: usize,
    b: usize,
    control: Option<usize>,
) -> Result<()> {
    let theta = params.rotation_angle(tau);
    let ctl: Vec<usize> = control.into_iter().collect();
    c.push(Gate::Y, &[b], &[a])?;
    c.push(Gate::Ry(theta), &[a], &ctl)?;
    c.push(Gate::Y, &[b], &[a])?;
    c.push(Gate::X, &[b], &[a])?;
    c.push(Gate::Rx(theta), &[a], &ctl)?;
    c.push(Gate::Rz(theta), &[b], &ctl)?;
    c.push(Gate::X, &[b], &[a])?;
    Ok(())
}

/// Append controlled `U(τ)^power`.
pub fn append_controlled_power(
    c: &mut Circuit,
    params: HeisenbergParams,
    tau: f64,
    power: u64,
    (a, b): (usize, usize),
    control: usize,
    mode: PowerMode,
) -> Result<()> {
    if power == 0 {
        return Err(Error::Precondition("power must be at least 1".into()));
    }
    match mode {
        PowerMode::Merged => append_evolution(c, params, tau * power as f64, a, b, Some(control)),
        PowerMode::Repeated => {
            for _ in 0..power {
                append_evolution(c, params, tau, a, b, Some(control))?;
            }
            Ok(())
        }
    }
}

/// Two-qubit circuit implementing `U(τ)` exactly.
pub fn evolution_circuit(params: HeisenbergParams, tau: f64) -> Circuit {
    let mut c = Circuit::new(2, 0);
    append_evolution(&mut c, params, tau, 0, 1, None).expect("fixed two-qubit layout");
    c
}

/// Three-qubit fragment applying `U(τ)^power` to the two qubits other than
/// `control` (in ascending order) when `control` is `|1⟩`. Powers are merged.
pub fn controlled_evolution_circuit(params: HeisenbergParams, tau: f64, power: u64, control: usize) -> Result<Circuit> {
    controlled_evolution_circuit_with(params, tau, power, control, PowerMode::Merged)
}

pub fn controlled_evolution_circuit_with(
    params: HeisenbergParams,
    tau: f64,
    power: u64,
    control: usize,
    mode: PowerMode,
) -> Result<Circuit> {
    if control > 2 {
        return Err(Error::Index(format!("control {control} out of range for 3 qubits")));
    }
    let state: Vec<usize> = (0..3).filter(|&q| q != control).collect();
    let mut c = Circuit::new(3, 0);
    append_controlled_power(&mut c, params, tau, power, (state[0], state[1]), control, mode)?;
    Ok(c)
}

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

pub type Matrix2 = [[Complex64; 2]; 2];
pub type Matrix4 = [[Complex64; 4]; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A primitive gate. Any gate may additionally be controlled on other qubits
/// when it is placed in a circuit; a CNOT is an `X` with one control.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    /// `exp(-i θ X / 2)`
    Rx(f64),
    /// `exp(-i θ Y / 2)`
    Ry(f64),
    /// `exp(-i θ Z / 2) = diag(e^{-iθ/2}, e^{iθ/2})`
    Rz(f64),
    /// `diag(1, e^{iθ})`; controlled, this is the QFT's controlled-phase.
    Phase(f64),
    Swap,
    /// Arbitrary single-qubit unitary.
    Unitary1(Box<Matrix2>),
    /// Arbitrary two-qubit unitary. Row/column index is `b0 + 2 * b1` where
    /// `b0`, `b1` are the bits of the first and second target.
    Unitary2(Box<Matrix4>),
}

/// Dense matrix of a gate, as applied to its targets.
#[derive(Debug, Clone, PartialEq)]
pub enum GateMatrix {
    One(Matrix2),
    Two(Matrix4),
}

impl Gate {
    pub fn arity(&self) -> usize {
        match self {
            Gate::Swap | Gate::Unitary2(_) => 2,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::H => "h",
            Gate::X => "x",
            Gate::Y => "y",
            Gate::Z => "z",
            Gate::S => "s",
            Gate::Sdg => "sdg",
            Gate::Rx(_) => "rx",
            Gate::Ry(_) => "ry",
            Gate::Rz(_) => "rz",
            Gate::Phase(_) => "p",
            Gate::Swap => "swap",
            Gate::Unitary1(_) => "u1",
            Gate::Unitary2(_) => "u2",
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx(t) | Gate::Ry(t) | Gate::Rz(t) | Gate::Phase(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_rotation(&self) -> bool {
        self.angle().is_some()
    }

    /// Rebuild a parameterless or rotation gate from its name.
    pub fn from_name(name: &str, angle: Option<f64>) -> Result<Gate> {
        let need = |a: Option<f64>| a.ok_or_else(|| Error::Input(format!("gate `{name}` requires an angle")));
        Ok(match name {
            "h" => Gate::H,
            "x" => Gate::X,
            "y" => Gate::Y,
            "z" => Gate::Z,
            "s" => Gate::S,
            "sdg" => Gate::Sdg,
            "swap" => Gate::Swap,
            "rx" => Gate::Rx(need(angle)?),
            "ry" => Gate::Ry(need(angle)?),
            "rz" => Gate::Rz(need(angle)?),
            "p" => Gate::Phase(need(angle)?),
            other => return Err(Error::Input(format!("unknown gate kind `{other}`"))),
        })
    }

    pub fn matrix(&self) -> GateMatrix {
        use GateMatrix::*;
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            Gate::H => One([[h, h], [h, -h]]),
            Gate::X => One([[ZERO, ONE], [ONE, ZERO]]),
            Gate::Y => One([[ZERO, -I], [I, ZERO]]),
            Gate::Z => One([[ONE, ZERO], [ZERO, -ONE]]),
            Gate::S => One([[ONE, ZERO], [ZERO, I]]),
            Gate::Sdg => One([[ONE, ZERO], [ZERO, -I]]),
            Gate::Rx(t) => {
                let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
                let c = Complex64::new(c, 0.0);
                let ms = Complex64::new(0.0, -s);
                One([[c, ms], [ms, c]])
            }
            Gate::Ry(t) => {
                let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
                One([
                    [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                    [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
                ])
            }
            Gate::Rz(t) => {
                One([[Complex64::from_polar(1.0, -t / 2.0), ZERO], [ZERO, Complex64::from_polar(1.0, t / 2.0)]])
            }
            Gate::Phase(t) => One([[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, *t)]]),
            Gate::Swap => Two([
                [ONE, ZERO, ZERO, ZERO],
                [ZERO, ZERO, ONE, ZERO],
                [ZERO, ONE, ZERO, ZERO],
                [ZERO, ZERO, ZERO, ONE],
            ]),
            Gate::Unitary1(m) => One(**m),
            Gate::Unitary2(m) => Two(**m),
        }
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::S => Gate::Sdg,
            Gate::Sdg => Gate::S,
            Gate::Rx(t) => Gate::Rx(-t),
            Gate::Ry(t) => Gate::Ry(-t),
            Gate::Rz(t) => Gate::Rz(-t),
            Gate::Phase(t) => Gate::Phase(-t),
            Gate::Unitary1(m) => Gate::Unitary1(Box::new(dagger2(m))),
            Gate::Unitary2(m) => Gate::Unitary2(Box::new(dagger4(m))),
            g => g.clone(),
        }
    }
}

fn dagger2(m: &Matrix2) -> Matrix2 {
    let mut out = [[ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = m[c][r].conj();
        }
    }
    out
}

fn dagger4(m: &Matrix4) -> Matrix4 {
    let mut out = [[ZERO; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = m[c][r].conj();
        }
    }
    out
}

/// Check arity, range, disjointness and finiteness for one gate placement.
pub(crate) fn validate_placement(n_qubits: usize, gate: &Gate, targets: &[usize], controls: &[usize]) -> Result<()> {
    if targets.len() != gate.arity() {
        return Err(Error::Index(format!(
            "gate `{}` acts on {} qubit(s), got {} target(s)",
            gate.name(),
            gate.arity(),
            targets.len()
        )));
    }
    if let Some(t) = gate.angle() {
        if !t.is_finite() {
            return Err(Error::Input(format!("non-finite angle for `{}`", gate.name())));
        }
    }
    let mut seen = 0u64;
    for &q in targets.iter().chain(controls) {
        if q >= n_qubits {
            return Err(Error::Index(format!("qubit {q} out of range for {n_qubits} qubits")));
        }
        if seen & (1 << q) != 0 {
            return Err(Error::Index(format!("qubit {q} used more than once in one operation")));
        }
        seen |= 1 << q;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mul2(a: &Matrix2, b: &Matrix2) -> Matrix2 {
        let mut out = [[ZERO; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        out
    }

    #[test]
    fn single_qubit_gates_are_unitary_and_invert() {
        let gates = [
            Gate::H,
            Gate::X,
            Gate::Y,
            Gate::Z,
            Gate::S,
            Gate::Sdg,
            Gate::Rx(0.3),
            Gate::Ry(-1.1),
            Gate::Rz(2.5),
            Gate::Phase(0.7),
        ];
        for g in gates {
            let (GateMatrix::One(m), GateMatrix::One(mi)) = (g.matrix(), g.inverse().matrix()) else { unreachable!() };
            let p = mul2(&m, &mi);
            for (r, row) in p.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    let want = if r == c { ONE } else { ZERO };
                    assert!((v - want).norm() < 1e-12, "{g:?}");
                }
            }
        }
    }

    #[test]
    fn rz_at_two_pi_is_minus_identity() {
        let GateMatrix::One(m) = Gate::Rz(2.0 * std::f64::consts::PI).matrix() else { unreachable!() };
        assert!((m[1][1] + ONE).norm() < 1e-12);
        assert!((m[0][0] + ONE).norm() < 1e-12);
    }

    #[test]
    fn placement_validation() {
        assert!(validate_placement(2, &Gate::X, &[1], &[0]).is_ok());
        assert!(matches!(validate_placement(2, &Gate::X, &[1], &[1]), Err(Error::Index(_))));
        assert!(matches!(validate_placement(2, &Gate::X, &[2], &[]), Err(Error::Index(_))));
        assert!(matches!(validate_placement(2, &Gate::Swap, &[0], &[]), Err(Error::Index(_))));
        assert!(matches!(validate_placement(1, &Gate::Rz(f64::NAN), &[0], &[]), Err(Error::Input(_))));
    }
}

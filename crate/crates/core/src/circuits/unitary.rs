use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ir::{Circuit, Op};
use crate::error::{Error, Result};
use crate::statevector::StateVector;

/// Largest register [`circuit_unitary`] will expand.
pub const MAX_UNITARY_QUBITS: usize = 10;

/// A square complex matrix on `2^k` basis states, indexed little-endian.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(DMatrix<Complex64>);

impl UnitaryMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() || !m.nrows().is_power_of_two() {
            return Err(Error::Input(format!("{}x{} is not a 2^k square matrix", m.nrows(), m.ncols())));
        }
        Ok(UnitaryMatrix(m))
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryMatrix(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    /// Max-abs entry error of `U†U − I`.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.0.adjoint() * &self.0;
        let id = DMatrix::<Complex64>::identity(self.dim(), self.dim());
        max_abs(&(p - id))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    pub fn max_abs_diff(&self, other: &UnitaryMatrix) -> f64 {
        max_abs(&(&self.0 - &other.0))
    }

    /// Max-abs entry error after aligning global phase on the largest entry of `other`.
    pub fn max_abs_diff_up_to_phase(&self, other: &UnitaryMatrix) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        let (mut best, mut at) = (0.0, (0, 0));
        for r in 0..other.dim() {
            for c in 0..other.dim() {
                let v = other.0[(r, c)].norm();
                if v > best {
                    best = v;
                    at = (r, c);
                }
            }
        }
        if best == 0.0 {
            return max_abs(&self.0);
        }
        let ratio = self.0[at] / other.0[at];
        let phase = if ratio.norm() > 0.0 { ratio / ratio.norm() } else { Complex64::new(1.0, 0.0) };
        max_abs(&(&self.0 - other.0.map(|z| z * phase)))
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim()).map(|r| (0..self.dim()).map(|c| self.0[(r, c)] * v[c]).sum()).collect()
    }
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Matrix of a measurement-free circuit, built column by column by
/// simulating every basis state.
pub fn circuit_unitary(c: &Circuit) -> Result<UnitaryMatrix> {
    if c.ops().iter().any(|op| matches!(op, Op::Measure { .. })) {
        return Err(Error::Unsupported("circuit_unitary: circuit contains measurements".into()));
    }
    if c.n_qubits() > MAX_UNITARY_QUBITS {
        return Err(Error::Size(c.n_qubits()));
    }
    let dim = 1usize << c.n_qubits();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for col in 0..dim {
        let mut s = StateVector::basis(c.n_qubits(), col)?;
        for op in c.ops() {
            if let Op::Gate { gate, targets, controls } = op {
                s.apply(gate, targets, controls)?;
            }
        }
        for (row, a) in s.amplitudes().iter().enumerate() {
            m[(row, col)] = *a;
        }
    }
    Ok(UnitaryMatrix(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::Gate;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn empty_circuit_is_identity() {
        let u = circuit_unitary(&Circuit::new(2, 0)).unwrap();
        assert_eq!(u, UnitaryMatrix::identity(4));
    }

    #[test]
    fn single_hadamard() {
        let mut c = Circuit::new(1, 0);
        c.h(0);
        let u = circuit_unitary(&c).unwrap();
        let h = FRAC_1_SQRT_2;
        let want = DMatrix::from_row_slice(2, 2, &[h, h, h, -h].map(|x| Complex64::new(x, 0.0)));
        assert!(u.max_abs_diff(&UnitaryMatrix::new(want).unwrap()) < 1e-15);
    }

    #[test]
    fn measurement_is_unsupported() {
        let mut c = Circuit::new(1, 1);
        c.measure(0, 0).unwrap();
        assert!(matches!(circuit_unitary(&c), Err(Error::Unsupported(_))));
    }

    #[test]
    fn global_phase_is_ignored_only_when_asked() {
        let mut a = Circuit::new(1, 0);
        a.rz(0.8, 0);
        let mut b = Circuit::new(1, 0);
        b.gate(Gate::Phase(0.8), &[0], &[]);
        let (ua, ub) = (circuit_unitary(&a).unwrap(), circuit_unitary(&b).unwrap());
        assert!(ua.max_abs_diff(&ub) > 0.1);
        assert!(ua.max_abs_diff_up_to_phase(&ub) < 1e-12);
    }

    #[test]
    fn unitarity_of_controlled_network() {
        let mut c = Circuit::new(3, 0);
        c.h(0).cx(0, 1).gate(Gate::Ry(0.4), &[2], &[0, 1]).swap(0, 2).cphase(1.3, 2, 1);
        assert!(circuit_unitary(&c).unwrap().is_unitary(1e-12));
    }
}

use std::f64::consts::PI;

use super::ir::Circuit;
use crate::error::{Error, Result};

pub const MAX_QFT_QUBITS: usize = 10;

/// `QFT|j⟩ = 2^{-n/2} Σ_k e^{2πi jk/2^n} |k⟩` on qubits `0..n`, little-endian.
///
/// Hadamard plus controlled-phase ladder from the most significant qubit
/// down, followed by the bit-reversal swaps.
pub fn qft_circuit(n: usize) -> Result<Circuit> {
    if !(1..=MAX_QFT_QUBITS).contains(&n) {
        return Err(Error::Size(n));
    }
    let mut c = Circuit::new(n, 0);
    for target in (0..n).rev() {
        c.h(target);
        for control in (0..target).rev() {
            c.cphase(PI / (1u64 << (target - control)) as f64, control, target);
        }
    }
    for q in 0..n / 2 {
        c.swap(q, n - 1 - q);
    }
    Ok(c)
}

pub fn inverse_qft_circuit(n: usize) -> Result<Circuit> {
    qft_circuit(n)?.inverse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{circuit_unitary, UnitaryMatrix};
    use crate::statevector::StateVector;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn dft(n: usize) -> UnitaryMatrix {
        let dim = 1usize << n;
        let norm = (dim as f64).sqrt().recip();
        let m = DMatrix::from_fn(dim, dim, |k, j| Complex64::from_polar(norm, 2.0 * PI * (j * k) as f64 / dim as f64));
        UnitaryMatrix::new(m).unwrap()
    }

    #[test]
    fn one_qubit_qft_is_hadamard() {
        let c = qft_circuit(1).unwrap();
        assert_eq!(c.gate_count().total, 1);
        assert_eq!(c.gate_count().get("h"), 1);
    }

    #[test]
    fn matches_discrete_fourier_matrix() {
        for n in 1..=5 {
            let u = circuit_unitary(&qft_circuit(n).unwrap()).unwrap();
            assert!(u.max_abs_diff(&dft(n)) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn inverse_undoes_forward_on_basis_states() {
        let mut round = qft_circuit(3).unwrap();
        round.compose(&inverse_qft_circuit(3).unwrap(), &[0, 1, 2], &[]).unwrap();
        let u = circuit_unitary(&round).unwrap();
        assert!(u.max_abs_diff(&UnitaryMatrix::identity(8)) < 1e-9);
        for k in 0..8 {
            let out = u.apply(StateVector::basis(3, k).unwrap().amplitudes());
            assert!((out[k].norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn qft_of_zero_is_uniform() {
        let u = circuit_unitary(&qft_circuit(3).unwrap()).unwrap();
        let out = u.apply(StateVector::new_zero(3).unwrap().amplitudes());
        for a in out {
            assert!((a - Complex64::new(8f64.sqrt().recip(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn size_limits() {
        assert!(qft_circuit(0).is_err());
        assert!(qft_circuit(11).is_err());
        assert!(inverse_qft_circuit(10).is_ok());
    }
}

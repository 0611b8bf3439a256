//! Circuit IR, the Heisenberg evolution operator and its decomposition,
//! Fourier-transform builders and an exact-unitary oracle.

pub mod gate;
pub mod heisenberg;
mod ir;
mod qft;
mod unitary;

pub use gate::{Gate, GateMatrix, Matrix2, Matrix4};
pub use heisenberg::{
    append_controlled_power, append_evolution, controlled_evolution_circuit, controlled_evolution_circuit_with,
    evolution_circuit, exact_time_evolution, heisenberg_hamiltonian, wrap_unit, Eigenstate, HeisenbergParams,
    PowerMode,
};
pub use ir::{Circuit, GateCount, Op};
pub use qft::{inverse_qft_circuit, qft_circuit, MAX_QFT_QUBITS};
pub use unitary::{circuit_unitary, UnitaryMatrix, MAX_UNITARY_QUBITS};

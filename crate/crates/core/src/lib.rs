//! Gate-level statevector simulation and a phase-estimation laboratory for
//! the two-spin Heisenberg model.
//!
//! The crate is layered bottom-up:
//!
//! - [`statevector`]: dense amplitudes, gate kernels, seeded sampling.
//! - [`circuits`]: circuit IR, `exp(−iHτ)` exact and decomposed, QFT.
//! - [`backend`]: runs circuits shot by shot with an optional Pauli noise model.
//! - [`estimators`]: base circuit with majority and circular readout, and the
//!   iterative (semiclassical QFT) procedure.
//! - [`bayes`]: the Bayesian single-qubit procedure with rejection sampling.
//! - [`experiments`]: τ sweeps, phase unwrapping, energy and R² recovery.

pub mod backend;
pub mod bayes;
pub mod circuits;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod rng;
pub mod statevector;

pub use error::{Error, Result};
pub use rng::RngSeed;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/statevector.md")]
    struct Statevector;
    #[doc = include_str!("../../../book/src/hamiltonian.md")]
    struct Hamiltonian;
    #[doc = include_str!("../../../book/src/estimators.md")]
    struct Estimators;
    #[doc = include_str!("../../../book/src/bayes.md")]
    struct Bayes;
    #[doc = include_str!("../../../book/src/experiments.md")]
    struct Experiments;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}

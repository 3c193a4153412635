//! Quantum Krylov subspace ground-state estimation on a classical simulator.
//!
//! Builds single- and multi-reference Krylov bases from an exactly
//! diagonalized Pauli-sum Hamiltonian, assembles the overlap and projected
//! matrices (optionally corrupted with Hadamard-test shot noise), regularizes
//! the generalized eigenvalue problem by singular-value truncation, and scores
//! the resulting eigenvalues with the unitary and imaginary reliability filters.

#[cfg(feature = "cli")]
pub mod cli;
pub mod eig;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod filters;
pub mod gevp;
pub mod hamiltonian_io;
pub mod krylov;
pub mod noise;
pub mod pauli;
pub mod record;
pub mod reference;

pub use error::{Error, Result};
pub use exact::SpectralDecomposition;
pub use experiment::System;
pub use krylov::{KrylovConfig, Variant};
pub use pauli::{PauliString, PauliSum, StateVector};

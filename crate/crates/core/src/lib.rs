//! Ground spaces of two-dimensional frustration-free, locally gapped lattice
//! Hamiltonians.
//!
//! The pipeline builds an approximate ground space projector as a matrix
//! product operator over lattice columns, sweeps a random subspace through
//! it column by column while trimming bond dimension, and keeps the low
//! energy part of the result. Exact diagonalization oracles and instance
//! generators live in [`oracle`].

pub mod agsp;
pub mod error;
pub mod hamiltonian;
pub mod oracle;
pub mod polynomial;
pub mod postproc;
pub mod scalar;
pub mod solver;
pub mod spectral;
pub mod subspace;
pub mod tensor;

pub use error::{Error, Result};

pub type C64 = scalar::C<f64>;
pub type Hamiltonian = hamiltonian::GridHamiltonian<f64>;
pub type Mpo = tensor::Mpo<f64>;
pub type Mps = tensor::SubspaceMps<f64>;
pub type HamiltonianF32 = hamiltonian::GridHamiltonian<f32>;
pub type MpoF32 = tensor::Mpo<f32>;
pub type MpsF32 = tensor::SubspaceMps<f32>;

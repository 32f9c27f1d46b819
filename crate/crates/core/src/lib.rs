//! Exact reduced dynamics of a single fermionic level tunnel-coupled to a
//! wideband reservoir.
//!
//! The crate evaluates the memory functions of the model, builds the exact
//! propagator and its divisors as superoperators, decomposes them into Choi
//! matrices and Kraus operators, computes the induced environment state and
//! its entropies, and integrates the time-local and time-nonlocal master
//! equations for comparison. A microscopic free-fermion simulation serves as
//! an independent reference.
//!
//! Units: the coupling `gamma` sets the scale, with `hbar = k_B = 1`.

pub mod choi_kraus;
pub mod diagnostics;
pub mod env_info;
pub mod error;
pub mod kernels;
pub mod liouville;
pub mod model;
pub mod quadrature;
pub mod solvers;
pub mod special_functions;

pub use error::{Error, Result};
pub use model::{DensityMatrix, ModelParams, TimeGrid};

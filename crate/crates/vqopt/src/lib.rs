//! Variational quantum optimization testbed.
//!
//! Simulates parameterized quantum circuits with realistic measurement noise
//! and compares noisy gradient descent, noisy random coordinate descent, and
//! SPSA on VQE/QAOA/QUBO workloads, alongside the Lipschitz-constant and
//! stability diagnostics that govern their relative cost.

pub mod ansatz;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod hamiltonians;
pub mod optim;
pub mod quantum;
pub mod qubo;
pub mod stats;

pub use error::{Error, Result};

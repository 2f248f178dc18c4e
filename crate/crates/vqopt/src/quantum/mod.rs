//! Dense state-vector simulation: basis states, parameterized gates, Pauli
//! observables, measurement sampling, and exact spectral decomposition.

pub mod gate;
pub mod pauli;
pub mod spectral;
pub mod state;

pub use gate::{apply_gate, apply_gate_mut, Gate, GateKind};
pub use pauli::{expectation, sample_pauli_mean, Observable, PauliLetter, PauliString};
pub use spectral::{ground_space, spectral, SpectralDecomposition};
pub use state::{fidelity_to_subspace, init_basis_state, StateVector};

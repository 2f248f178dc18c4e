//! Builders for the physics Hamiltonians driving the benchmark workloads,
//! plus the fidelity-target specification used by the QAOA experiments.
//!
//! All chain models use open boundary conditions: bond sums run over
//! j = 0..N−2.

use crate::error::{Error, Result};
use crate::quantum::pauli::{Observable, PauliLetter, PauliString};
use crate::quantum::state::{fidelity_to_subspace, StateVector};

fn require_chain(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "chain Hamiltonians need N ≥ 2, got {n}"
        )));
    }
    Ok(())
}

/// Transverse-field Ising model
/// `H = J·Σ_j Z_j Z_{j+1} + Δ·Σ_j X_j` with open boundary.
pub fn build_tfim(n: usize, j: f64, delta: f64) -> Result<Observable> {
    require_chain(n)?;
    let mut terms = Vec::with_capacity(2 * n - 1);
    for b in 0..n - 1 {
        terms.push((
            j,
            PauliString::two(n, (b, PauliLetter::Z), (b + 1, PauliLetter::Z)),
        ));
    }
    for q in 0..n {
        terms.push((delta, PauliString::single(n, q, PauliLetter::X)));
    }
    Observable::new(n, terms)
}

/// Controlled Ising chain `H[h] = Σ_j Z_{j+1}Z_j + Σ_j (Z_j + h·X_j)`.
///
/// The QAOA generators are `H₁ = H[−4]`, `H₂ = H[+4]`; the initial state is
/// the ground state of `H[−2]` and the target the ground state of `H[+2]`.
pub fn build_ising_control(n: usize, h: f64) -> Result<Observable> {
    require_chain(n)?;
    let mut terms = Vec::with_capacity(3 * n - 1);
    for b in 0..n - 1 {
        terms.push((
            1.0,
            PauliString::two(n, (b, PauliLetter::Z), (b + 1, PauliLetter::Z)),
        ));
    }
    for q in 0..n {
        terms.push((1.0, PauliString::single(n, q, PauliLetter::Z)));
        terms.push((h, PauliString::single(n, q, PauliLetter::X)));
    }
    Observable::new(n, terms)
}

/// Anisotropic Heisenberg pair:
/// `H₁ = J·Σ_j (X_{j+1}X_j + Y_{j+1}Y_j)`, `H₂ = Δ·Σ_j Z_{j+1}Z_j`.
pub fn build_heisenberg_pair(n: usize, j: f64, delta: f64) -> Result<(Observable, Observable)> {
    require_chain(n)?;
    let mut h1 = Vec::with_capacity(2 * (n - 1));
    let mut h2 = Vec::with_capacity(n - 1);
    for b in 0..n - 1 {
        h1.push((
            j,
            PauliString::two(n, (b, PauliLetter::X), (b + 1, PauliLetter::X)),
        ));
        h1.push((
            j,
            PauliString::two(n, (b, PauliLetter::Y), (b + 1, PauliLetter::Y)),
        ));
        h2.push((
            delta,
            PauliString::two(n, (b, PauliLetter::Z), (b + 1, PauliLetter::Z)),
        ));
    }
    Ok((Observable::new(n, h1)?, Observable::new(n, h2)?))
}

/// Orthonormal ground-space basis used as a fidelity optimization target.
#[derive(Debug, Clone)]
pub struct FidelityTarget {
    basis: Vec<StateVector>,
}

impl FidelityTarget {
    pub fn new(basis: Vec<StateVector>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::InvalidInput("fidelity target needs a basis".into()));
        }
        // Re-use the orthonormality check from fidelity_to_subspace.
        fidelity_to_subspace(&basis[0], &basis)?;
        Ok(FidelityTarget { basis })
    }

    pub fn basis(&self) -> &[StateVector] {
        &self.basis
    }

    pub fn n_qubits(&self) -> usize {
        self.basis[0].n_qubits()
    }

    /// `1 − Σ_k |⟨b_k|state⟩|²`: minimizing this maximizes fidelity.
    pub fn cost(&self, state: &StateVector) -> Result<f64> {
        Ok(1.0 - self.fidelity(state)?)
    }

    pub fn fidelity(&self, state: &StateVector) -> Result<f64> {
        fidelity_to_subspace(state, &self.basis)
    }
}

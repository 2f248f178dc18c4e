use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense state vector over `n_qubits` qubits.
///
/// Index convention: qubit 0 is the leftmost bit of a basis label and the
/// most significant bit of the amplitude index, so `|10⟩` on two qubits is
/// amplitude index 2. All gate and Pauli operations below follow this
/// convention.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero_state(n_qubits: usize) -> Self {
        let mut amps = vec![Complex64::ZERO; 1 << n_qubits];
        amps[0] = Complex64::ONE;
        StateVector { n_qubits, amps }
    }

    /// Uniform superposition `|+⟩^⊗n`.
    pub fn plus_state(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        StateVector {
            n_qubits,
            amps: vec![a; dim],
        }
    }

    /// Computational basis state described by a bitstring, qubit 0 leftmost.
    pub fn basis_state(n_qubits: usize, bits: &str) -> Result<Self> {
        if bits.len() != n_qubits {
            return Err(Error::InvalidInput(format!(
                "bitstring length {} does not match {} qubits",
                bits.len(),
                n_qubits
            )));
        }
        let mut index = 0usize;
        for c in bits.chars() {
            index <<= 1;
            match c {
                '0' => {}
                '1' => index |= 1,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "bitstring may only contain 0/1, found {other:?}"
                    )))
                }
            }
        }
        let mut amps = vec![Complex64::ZERO; 1 << n_qubits];
        amps[index] = Complex64::ONE;
        Ok(StateVector { n_qubits, amps })
    }

    /// Builds a normalized state from raw amplitudes.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << n_qubits {
            return Err(Error::Dimension(format!(
                "expected {} amplitudes for {} qubits, got {}",
                1usize << n_qubits,
                n_qubits,
                amps.len()
            )));
        }
        let state = StateVector { n_qubits, amps };
        if (state.norm() - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "amplitudes are not normalized (norm {})",
                state.norm()
            )));
        }
        Ok(state)
    }

    /// Wraps raw amplitudes without the normalization check. Derivative
    /// states flowing through the estimator are legitimately unnormalized.
    pub(crate) fn raw(n_qubits: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n_qubits);
        StateVector { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Squared overlap `|⟨self|other⟩|²`.
    pub fn overlap_sq(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// Builds the basis state `|bits⟩`; amplitude 1 sits at the index whose
/// binary expansion is `bits` with qubit 0 as the leftmost bit.
pub fn init_basis_state(n_qubits: usize, bits: &str) -> Result<StateVector> {
    StateVector::basis_state(n_qubits, bits)
}

/// Projection weight of `state` onto the span of `basis`: `Σ_k |⟨b_k|state⟩|²`.
///
/// The basis must be orthonormal within 1e-8.
pub fn fidelity_to_subspace(state: &StateVector, basis: &[StateVector]) -> Result<f64> {
    if basis.is_empty() {
        return Err(Error::InvalidInput("fidelity basis is empty".into()));
    }
    for b in basis {
        if b.dim() != state.dim() {
            return Err(Error::Dimension(
                "basis vector dimension does not match state".into(),
            ));
        }
    }
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let g = a.inner(b);
            let expected = if i == j { 1.0 } else { 0.0 };
            if (g.re - expected).abs() > 1e-8 || g.im.abs() > 1e-8 {
                return Err(Error::InvalidInput(format!(
                    "fidelity basis is not orthonormal: ⟨b{i}|b{j}⟩ = {g}"
                )));
            }
        }
    }
    Ok(basis.iter().map(|b| b.inner(state).norm_sqr()).sum())
}

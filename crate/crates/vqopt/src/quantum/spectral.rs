use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantum::pauli::{Observable, PauliLetter};
use crate::quantum::state::StateVector;

/// Qubit bound for cached full decompositions (`spectral`).
pub const SPECTRAL_QUBIT_BOUND: usize = 12;
/// Qubit bound for ground-space extraction.
pub const GROUND_SPACE_QUBIT_BOUND: usize = 14;

/// Full eigendecomposition of an observable: `H = V diag(λ) V†` with
/// eigenvalues ascending and orthonormal columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    /// `exp(−iHα)|ψ⟩` through the eigenbasis.
    pub fn evolve(&self, state: &StateVector, alpha: f64) -> Result<StateVector> {
        let dim = self.eigenvalues.len();
        if state.dim() != dim {
            return Err(Error::Dimension(
                "state does not match decomposition dimension".into(),
            ));
        }
        let psi = DVector::from_column_slice(state.amplitudes());
        let mut y = self.eigenvectors.adjoint() * psi;
        for (k, v) in y.iter_mut().enumerate() {
            *v *= Complex64::from_polar(1.0, -self.eigenvalues[k] * alpha);
        }
        let out = &self.eigenvectors * y;
        // Unitary: preserves whatever norm the input carried (derivative
        // states are unnormalized by construction).
        Ok(StateVector::raw(
            state.n_qubits(),
            out.as_slice().to_vec(),
        ))
    }

    /// Max entrywise residual of `V diag(λ) V† − H`.
    pub fn reconstruction_residual(&self, obs: &Observable) -> f64 {
        let dim = self.eigenvalues.len();
        let mut lam = DMatrix::<Complex64>::zeros(dim, dim);
        for k in 0..dim {
            lam[(k, k)] = Complex64::new(self.eigenvalues[k], 0.0);
        }
        let rebuilt = &self.eigenvectors * lam * self.eigenvectors.adjoint();
        let dense = obs.dense();
        let mut max = 0.0f64;
        for k in 0..dim * dim {
            max = max.max((rebuilt.as_slice()[k] - dense.as_slice()[k]).norm());
        }
        max
    }

    /// Max deviation of `V†V` from the identity.
    pub fn orthonormality_residual(&self) -> f64 {
        let dim = self.eigenvalues.len();
        let g = self.eigenvectors.adjoint() * &self.eigenvectors;
        let mut max = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                let expected = if r == c { 1.0 } else { 0.0 };
                max = max.max((g[(r, c)] - Complex64::new(expected, 0.0)).norm());
            }
        }
        max
    }
}

/// Dense real matrix of an observable whose terms all carry an even number
/// of Y letters (every Hamiltonian in this crate). Returns `None` otherwise.
fn dense_real(obs: &Observable) -> Option<DMatrix<f64>> {
    for (_, p) in obs.terms() {
        let ys = p
            .letters()
            .iter()
            .filter(|&&l| l == PauliLetter::Y)
            .count();
        if ys % 2 == 1 {
            return None;
        }
    }
    let n = obs.n_qubits();
    let dim = 1usize << n;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for (c, p) in obs.terms() {
        let mut mask = 0usize;
        for (q, &l) in p.letters().iter().enumerate() {
            if matches!(l, PauliLetter::X | PauliLetter::Y) {
                mask |= 1 << (n - 1 - q);
            }
        }
        for k in 0..dim {
            let mut phase = Complex64::ONE;
            for (q, &l) in p.letters().iter().enumerate() {
                let bit = (k >> (n - 1 - q)) & 1;
                match l {
                    PauliLetter::I | PauliLetter::X => {}
                    PauliLetter::Z => {
                        if bit == 1 {
                            phase = -phase;
                        }
                    }
                    PauliLetter::Y => {
                        phase *= if bit == 0 {
                            Complex64::new(0.0, 1.0)
                        } else {
                            Complex64::new(0.0, -1.0)
                        };
                    }
                }
            }
            debug_assert!(phase.im.abs() < 1e-14);
            m[(k ^ mask, k)] += c * phase.re;
        }
    }
    Some(m)
}

/// Symmetric eigendecomposition sorted ascending.
fn eigh_real(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let dim = m.nrows();
    let se = nalgebra::SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    (eigenvalues, vectors)
}

/// Hermitian eigendecomposition. Real-symmetric observables use the real
/// solver directly; the general case embeds `H = A + iB` into the real
/// symmetric `[[A, −B], [B, A]]`, whose spectrum duplicates each eigenvalue.
fn eigh_observable(obs: &Observable) -> (Vec<f64>, DMatrix<Complex64>) {
    if let Some(real) = dense_real(obs) {
        let (vals, vecs) = eigh_real(real);
        let cmplx = vecs.map(|v| Complex64::new(v, 0.0));
        return (vals, cmplx);
    }
    let h = obs.dense();
    let dim = h.nrows();
    let mut m = DMatrix::<f64>::zeros(2 * dim, 2 * dim);
    for r in 0..dim {
        for c in 0..dim {
            let v = h[(r, c)];
            m[(r, c)] = v.re;
            m[(r + dim, c + dim)] = v.re;
            m[(r, c + dim)] = -v.im;
            m[(r + dim, c)] = v.im;
        }
    }
    let (vals, vecs) = eigh_real(m);
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-9 * scale;

    let mut eigenvalues = Vec::with_capacity(dim);
    let mut eigenvectors = DMatrix::<Complex64>::zeros(dim, dim);
    let mut col_out = 0usize;
    let mut start = 0usize;
    while start < 2 * dim {
        let mut end = start + 1;
        while end < 2 * dim && (vals[end] - vals[end - 1]).abs() <= tol {
            end += 1;
        }
        let want = (end - start) / 2;
        // Complex Gram-Schmidt over the embedded cluster; duplicates map to
        // i-multiples and drop out.
        let mut kept: Vec<DVector<Complex64>> = Vec::with_capacity(want);
        for src in start..end {
            if kept.len() == want {
                break;
            }
            let col = vecs.column(src);
            let mut z = DVector::<Complex64>::from_fn(dim, |r, _| {
                Complex64::new(col[r], col[r + dim])
            });
            for prev in &kept {
                let proj: Complex64 = prev.dotc(&z);
                z -= prev * proj;
            }
            let norm = z.norm();
            if norm > 1e-6 {
                z /= Complex64::new(norm, 0.0);
                kept.push(z);
            }
        }
        let lambda =
            vals[start..end].iter().sum::<f64>() / (end - start) as f64;
        for z in kept {
            eigenvalues.push(lambda);
            eigenvectors.set_column(col_out, &z);
            col_out += 1;
        }
        start = end;
    }
    debug_assert_eq!(col_out, dim);
    (eigenvalues, eigenvectors)
}

/// Canonical cache key for an observable: qubit count plus the simplified,
/// sorted term list with exact coefficient bits.
fn cache_key(obs: &Observable) -> (usize, Vec<(String, u64)>) {
    let simplified = obs.simplified();
    let terms = simplified
        .terms()
        .iter()
        .map(|(c, p)| (p.label(), c.to_bits()))
        .collect();
    (obs.n_qubits(), terms)
}

type CacheKey = (usize, Vec<(String, u64)>);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<SpectralDecomposition>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<SpectralDecomposition>>>> =
        OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Full spectral decomposition, cached per observable identity.
pub fn spectral(obs: &Observable) -> Result<Arc<SpectralDecomposition>> {
    if obs.n_qubits() > SPECTRAL_QUBIT_BOUND {
        return Err(Error::Capability(format!(
            "spectral decomposition limited to {SPECTRAL_QUBIT_BOUND} qubits, got {}",
            obs.n_qubits()
        )));
    }
    let key = cache_key(obs);
    if let Some(hit) = cache().lock().unwrap().get(&key) {
        return Ok(Arc::clone(hit));
    }
    let (eigenvalues, eigenvectors) = eigh_observable(obs);
    let decomp = Arc::new(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    });
    cache()
        .lock()
        .unwrap()
        .entry(key)
        .or_insert_with(|| Arc::clone(&decomp));
    Ok(decomp)
}

/// Minimum eigenvalue and an orthonormal basis of the eigenspace within
/// `degeneracy_tol` of it.
pub fn ground_space(obs: &Observable, degeneracy_tol: f64) -> Result<(f64, Vec<StateVector>)> {
    if obs.n_qubits() > GROUND_SPACE_QUBIT_BOUND {
        return Err(Error::Capability(format!(
            "ground space extraction limited to {GROUND_SPACE_QUBIT_BOUND} qubits, got {}",
            obs.n_qubits()
        )));
    }
    let (vals, vecs) = eigh_observable(obs);
    let e0 = vals[0];
    let n = obs.n_qubits();
    let mut raw: Vec<DVector<Complex64>> = Vec::new();
    for (k, &v) in vals.iter().enumerate() {
        if v - e0 <= degeneracy_tol {
            raw.push(vecs.column(k).into_owned());
        } else {
            break;
        }
    }
    // Re-orthonormalize the ground cluster so downstream fidelity checks see
    // a clean basis.
    let mut basis: Vec<StateVector> = Vec::with_capacity(raw.len());
    let mut kept: Vec<DVector<Complex64>> = Vec::new();
    for mut z in raw {
        for prev in &kept {
            let proj: Complex64 = prev.dotc(&z);
            z -= prev * proj;
        }
        let norm = z.norm();
        if norm > 1e-8 {
            z /= Complex64::new(norm, 0.0);
            kept.push(z);
        }
    }
    for z in kept {
        basis.push(StateVector::from_amplitudes(n, z.as_slice().to_vec())?);
    }
    Ok((e0, basis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::pauli::PauliString;
    use crate::quantum::state::init_basis_state;

    #[test]
    fn pauli_x_spectrum() {
        let obs = Observable::new(1, vec![(1.0, PauliString::parse("X").unwrap())]).unwrap();
        let d = spectral(&obs).unwrap();
        assert!((d.eigenvalues()[0] + 1.0).abs() < 1e-12);
        assert!((d.eigenvalues()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zz_spectrum_is_degenerate() {
        let obs = Observable::new(2, vec![(1.0, PauliString::parse("ZZ").unwrap())]).unwrap();
        let d = spectral(&obs).unwrap();
        let expected = [-1.0, -1.0, 1.0, 1.0];
        for (v, e) in d.eigenvalues().iter().zip(expected) {
            assert!((v - e).abs() < 1e-12);
        }
        assert!(d.orthonormality_residual() < 1e-10);
        assert!(d.reconstruction_residual(&obs) < 1e-8);
    }

    #[test]
    fn complex_hermitian_path() {
        // Single Y term exercises the embedding branch.
        let obs = Observable::new(1, vec![(1.0, PauliString::parse("Y").unwrap())]).unwrap();
        let d = spectral(&obs).unwrap();
        assert!((d.eigenvalues()[0] + 1.0).abs() < 1e-10);
        assert!((d.eigenvalues()[1] - 1.0).abs() < 1e-10);
        assert!(d.reconstruction_residual(&obs) < 1e-8);
        assert!(d.orthonormality_residual() < 1e-10);
    }

    #[test]
    fn ground_space_of_z() {
        let obs = Observable::new(1, vec![(1.0, PauliString::parse("Z").unwrap())]).unwrap();
        let (e0, basis) = ground_space(&obs, 1e-8).unwrap();
        assert!((e0 + 1.0).abs() < 1e-12);
        assert_eq!(basis.len(), 1);
        let one = init_basis_state(1, "1").unwrap();
        assert!((basis[0].overlap_sq(&one) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ground_space_rejects_oversized() {
        let obs = Observable::new(15, vec![(1.0, PauliString::identity(15))]).unwrap();
        assert!(matches!(
            ground_space(&obs, 1e-8),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn spectral_cache_returns_same_instance() {
        let obs = Observable::new(2, vec![(0.5, PauliString::parse("XZ").unwrap())]).unwrap();
        let a = spectral(&obs).unwrap();
        let b = spectral(&obs).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }

    #[test]
    fn evolve_matches_x_rotation() {
        // exp(−iXα)|0⟩ = cos α |0⟩ − i sin α |1⟩.
        let obs = Observable::new(1, vec![(1.0, PauliString::parse("X").unwrap())]).unwrap();
        let d = spectral(&obs).unwrap();
        let alpha = 0.8;
        let out = d.evolve(&StateVector::zero_state(1), alpha).unwrap();
        assert!((out.amplitudes()[0] - Complex64::new(alpha.cos(), 0.0)).norm() < 1e-12);
        assert!((out.amplitudes()[1] - Complex64::new(0.0, -alpha.sin())).norm() < 1e-12);
    }
}

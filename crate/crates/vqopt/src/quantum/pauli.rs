use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::quantum::state::StateVector;

/// Per-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    pub fn as_char(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        Some(match c {
            'I' => PauliLetter::I,
            'X' => PauliLetter::X,
            'Y' => PauliLetter::Y,
            'Z' => PauliLetter::Z,
            _ => return None,
        })
    }
}

/// A Pauli string: one letter per qubit, qubit 0 leftmost.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<PauliLetter>,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        PauliString {
            letters: vec![PauliLetter::I; n_qubits],
        }
    }

    pub fn new(letters: Vec<PauliLetter>) -> Self {
        PauliString { letters }
    }

    /// Parses strings like `"IZZX"`.
    pub fn parse(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| {
                PauliLetter::from_char(c)
                    .ok_or_else(|| Error::InvalidInput(format!("bad Pauli letter {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliString { letters })
    }

    /// Single non-identity letter at `qubit`.
    pub fn single(n_qubits: usize, qubit: usize, letter: PauliLetter) -> Self {
        let mut letters = vec![PauliLetter::I; n_qubits];
        letters[qubit] = letter;
        PauliString { letters }
    }

    /// Two non-identity letters.
    pub fn two(n_qubits: usize, a: (usize, PauliLetter), b: (usize, PauliLetter)) -> Self {
        let mut letters = vec![PauliLetter::I; n_qubits];
        letters[a.0] = a.1;
        letters[b.0] = b.1;
        PauliString { letters }
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[PauliLetter] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&l| l == PauliLetter::I)
    }

    /// True when the string contains only I/Z letters (diagonal operator).
    pub fn is_diagonal(&self) -> bool {
        self.letters
            .iter()
            .all(|&l| matches!(l, PauliLetter::I | PauliLetter::Z))
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&l| l != PauliLetter::I).count()
    }

    pub fn label(&self) -> String {
        self.letters.iter().map(|l| l.as_char()).collect()
    }

    /// Bit mask of flipped qubits (X/Y letters), in amplitude-index space.
    fn flip_mask(&self, n: usize) -> usize {
        let mut mask = 0usize;
        for (q, &l) in self.letters.iter().enumerate() {
            if matches!(l, PauliLetter::X | PauliLetter::Y) {
                mask |= 1 << (n - 1 - q);
            }
        }
        mask
    }

    /// Phase contributed by `P` applied to the basis state with index `k`:
    /// `P|k⟩ = phase(k)·|k ⊕ flip_mask⟩`.
    fn phase(&self, n: usize, k: usize) -> Complex64 {
        let mut phase = Complex64::ONE;
        for (q, &l) in self.letters.iter().enumerate() {
            let bit = (k >> (n - 1 - q)) & 1;
            match l {
                PauliLetter::I | PauliLetter::X => {}
                PauliLetter::Z => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
                PauliLetter::Y => {
                    // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩
                    phase *= if bit == 0 {
                        Complex64::new(0.0, 1.0)
                    } else {
                        Complex64::new(0.0, -1.0)
                    };
                }
            }
        }
        phase
    }

    /// `P|state⟩`.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if self.n_qubits() != state.n_qubits() {
            return Err(Error::Dimension(
                "Pauli string does not match state size".into(),
            ));
        }
        let n = state.n_qubits();
        Ok(StateVector::raw(
            n,
            self.apply_to_amplitudes(n, state.amplitudes()),
        ))
    }

    /// `P` applied to raw amplitudes, no normalization assumptions.
    pub(crate) fn apply_to_amplitudes(&self, n: usize, amps: &[Complex64]) -> Vec<Complex64> {
        let mask = self.flip_mask(n);
        let mut out = vec![Complex64::ZERO; amps.len()];
        for (k, &a) in amps.iter().enumerate() {
            out[k ^ mask] = self.phase(n, k) * a;
        }
        out
    }

    /// `⟨state|P|state⟩` as a complex number (the caller checks the residue).
    pub fn expectation_raw(&self, state: &StateVector) -> Result<Complex64> {
        if self.n_qubits() != state.n_qubits() {
            return Err(Error::Dimension(
                "Pauli string does not match state size".into(),
            ));
        }
        let n = state.n_qubits();
        let mask = self.flip_mask(n);
        let amps = state.amplitudes();
        let mut acc = Complex64::ZERO;
        for (k, &a) in amps.iter().enumerate() {
            acc += amps[k ^ mask].conj() * self.phase(n, k) * a;
        }
        Ok(acc)
    }

    /// `⟨state|P|state⟩`, asserting the imaginary residue is below 1e-10.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        let e = self.expectation_raw(state)?;
        if e.im.abs() > 1e-10 {
            return Err(Error::Internal(format!(
                "Pauli expectation has imaginary residue {}",
                e.im
            )));
        }
        Ok(e.re)
    }
}

/// Real-weighted sum of Pauli strings. Hermitian by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl Observable {
    pub fn new(n_qubits: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        for (c, p) in &terms {
            if p.n_qubits() != n_qubits {
                return Err(Error::Dimension(format!(
                    "term {} has {} letters, expected {}",
                    p.label(),
                    p.n_qubits(),
                    n_qubits
                )));
            }
            if !c.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite coefficient for term {}",
                    p.label()
                )));
            }
        }
        Ok(Observable { n_qubits, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Merges duplicate strings and drops zero coefficients. Term order is
    /// canonical (lexicographic by label) so equal observables compare equal.
    pub fn simplified(&self) -> Observable {
        use std::collections::BTreeMap;
        let mut merged: BTreeMap<String, (f64, PauliString)> = BTreeMap::new();
        for (c, p) in &self.terms {
            let e = merged
                .entry(p.label())
                .or_insert_with(|| (0.0, p.clone()));
            e.0 += c;
        }
        let terms = merged
            .into_values()
            .filter(|(c, _)| c.abs() > 0.0)
            .collect();
        Observable {
            n_qubits: self.n_qubits,
            terms,
        }
    }

    /// `a·A + b·B` as a flat term list.
    pub fn linear_combination(a: f64, lhs: &Observable, b: f64, rhs: &Observable) -> Result<Observable> {
        if lhs.n_qubits != rhs.n_qubits {
            return Err(Error::Dimension("observables differ in qubit count".into()));
        }
        let mut terms = Vec::with_capacity(lhs.terms.len() + rhs.terms.len());
        terms.extend(lhs.terms.iter().map(|(c, p)| (a * c, p.clone())));
        terms.extend(rhs.terms.iter().map(|(c, p)| (b * c, p.clone())));
        Observable::new(lhs.n_qubits, terms)
    }

    /// True when every term is an I/Z string.
    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|(_, p)| p.is_diagonal())
    }

    /// Diagonal entry `⟨x|H|x⟩` for a diagonal observable, `x` given as a
    /// basis index (qubit 0 = most significant bit).
    pub fn diagonal_entry(&self, index: usize) -> Result<f64> {
        if !self.is_diagonal() {
            return Err(Error::Contract(
                "diagonal_entry requires an I/Z observable".into(),
            ));
        }
        let n = self.n_qubits;
        let mut acc = 0.0;
        for (c, p) in &self.terms {
            let mut sign = 1.0;
            for (q, &l) in p.letters().iter().enumerate() {
                if l == PauliLetter::Z && (index >> (n - 1 - q)) & 1 == 1 {
                    sign = -sign;
                }
            }
            acc += c * sign;
        }
        Ok(acc)
    }

    /// Dense matrix in the computational basis.
    pub fn dense(&self) -> nalgebra::DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits;
        let n = self.n_qubits;
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
        for (c, p) in &self.terms {
            let mask = p.flip_mask(n);
            for k in 0..dim {
                // column k: H|k⟩ += c·phase(k)|k ⊕ mask⟩
                m[(k ^ mask, k)] += Complex64::new(*c, 0.0) * p.phase(n, k);
            }
        }
        m
    }
}

/// `⟨state|obs|state⟩ = Σ_k c_k ⟨P_k⟩`.
pub fn expectation(state: &StateVector, obs: &Observable) -> Result<f64> {
    if obs.n_qubits() != state.n_qubits() {
        return Err(Error::Dimension(
            "observable does not match state size".into(),
        ));
    }
    let mut acc = 0.0;
    for (c, p) in obs.terms() {
        acc += c * p.expectation(state)?;
    }
    Ok(acc)
}

/// Draws `shots` i.i.d. ±1 outcomes with `P(+1) = (1+⟨P⟩)/2` and returns
/// their mean. The binomial count of +1 outcomes is drawn directly, which is
/// distributionally identical to averaging individual shots.
pub fn sample_pauli_mean<R: Rng>(
    state: &StateVector,
    p: &PauliString,
    shots: u64,
    rng: &mut R,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::InvalidInput("shots must be ≥ 1".into()));
    }
    let mean = p.expectation(state)?;
    sample_mean_from_expectation(mean, shots, rng)
}

/// Shot-sampling core shared with projector measurements.
pub(crate) fn sample_mean_from_expectation<R: Rng>(
    mean: f64,
    shots: u64,
    rng: &mut R,
) -> Result<f64> {
    let mut prob = (1.0 + mean) / 2.0;
    if !(-1e-9..=1.0 + 1e-9).contains(&prob) {
        return Err(Error::Internal(format!(
            "outcome probability {prob} outside [0,1]; state is corrupted"
        )));
    }
    prob = prob.clamp(0.0, 1.0);
    let dist = Binomial::new(shots, prob)
        .map_err(|e| Error::Internal(format!("binomial setup failed: {e}")))?;
    let ups = dist.sample(rng);
    Ok(2.0 * ups as f64 / shots as f64 - 1.0)
}

/// Samples the mean of `shots` Bernoulli(p) outcomes (projector measurement).
pub(crate) fn sample_bernoulli_mean<R: Rng>(p: f64, shots: u64, rng: &mut R) -> Result<f64> {
    if !(-1e-9..=1.0 + 1e-9).contains(&p) {
        return Err(Error::Internal(format!(
            "projector probability {p} outside [0,1]"
        )));
    }
    let dist = Binomial::new(shots, p.clamp(0.0, 1.0))
        .map_err(|e| Error::Internal(format!("binomial setup failed: {e}")))?;
    Ok(dist.sample(rng) as f64 / shots as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::state::init_basis_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn z_expectation_on_zero() {
        let s = init_basis_state(1, "0").unwrap();
        let z = PauliString::parse("Z").unwrap();
        assert!((z.expectation(&s).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_expectation_is_one() {
        let s = StateVector::plus_state(3);
        let i = PauliString::identity(3);
        assert!((i.expectation(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn y_expectation_is_real() {
        // (|0⟩ + i|1⟩)/√2 is a +1 eigenstate of Y.
        let amps = vec![
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2),
        ];
        let s = StateVector::from_amplitudes(1, amps).unwrap();
        let y = PauliString::parse("Y").unwrap();
        assert!((y.expectation(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenstate_sampling_is_exact() {
        let s = init_basis_state(2, "00").unwrap();
        let zz = PauliString::parse("ZZ").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for shots in [1u64, 7, 100] {
            let m = sample_pauli_mean(&s, &zz, shots, &mut rng).unwrap();
            assert_eq!(m, 1.0);
        }
    }

    #[test]
    fn sampling_std_matches_binomial() {
        // ⟨X⟩ = 0 on |0⟩; the sample mean over 1000 shots has std 1/√1000.
        let s = init_basis_state(1, "0").unwrap();
        let x = PauliString::parse("X").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let reps = 4000;
        let samples: Vec<f64> = (0..reps)
            .map(|_| sample_pauli_mean(&s, &x, 1000, &mut rng).unwrap())
            .collect();
        let mean = samples.iter().sum::<f64>() / reps as f64;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / reps as f64;
        let expected = 1.0 / 1000.0_f64.sqrt();
        assert!(
            (var.sqrt() - expected).abs() < 0.1 * expected,
            "std {} vs {}",
            var.sqrt(),
            expected
        );
    }

    #[test]
    fn fixed_seed_replays_identical_means() {
        let s = StateVector::plus_state(2);
        let zz = PauliString::parse("ZZ").unwrap();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            (0..20)
                .map(|_| sample_pauli_mean(&s, &zz, 321, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn sampling_is_unbiased() {
        // Invariant: over 10⁴ repetitions with shots=100 the mean of means is
        // within 5 standard errors of ⟨P⟩.
        let g = Gate::new(crate::quantum::gate::GateKind::Ry, vec![0]).unwrap();
        let s = crate::quantum::gate::apply_gate(&StateVector::zero_state(1), &g, Some(0.9))
            .unwrap();
        let z = PauliString::parse("Z").unwrap();
        let truth = z.expectation(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let reps = 10_000;
        let shots = 100u64;
        let mean: f64 = (0..reps)
            .map(|_| sample_pauli_mean(&s, &z, shots, &mut rng).unwrap())
            .sum::<f64>()
            / reps as f64;
        let single_var = (1.0 - truth * truth) / shots as f64;
        let se = (single_var / reps as f64).sqrt();
        assert!(
            (mean - truth).abs() < 5.0 * se,
            "bias {} exceeds 5 se {}",
            (mean - truth).abs(),
            se
        );
    }

    use crate::quantum::gate::Gate;

    #[test]
    fn expectation_linearity() {
        let s = StateVector::plus_state(2);
        let a = Observable::new(
            2,
            vec![
                (0.7, PauliString::parse("ZI").unwrap()),
                (-0.2, PauliString::parse("XX").unwrap()),
            ],
        )
        .unwrap();
        let b = Observable::new(
            2,
            vec![
                (1.3, PauliString::parse("ZZ").unwrap()),
                (0.5, PauliString::parse("IX").unwrap()),
            ],
        )
        .unwrap();
        let combo = Observable::linear_combination(2.0, &a, -0.4, &b).unwrap();
        let lhs = expectation(&s, &combo).unwrap();
        let rhs = 2.0 * expectation(&s, &a).unwrap() - 0.4 * expectation(&s, &b).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn dense_matches_diagonal_entry() {
        let obs = Observable::new(
            2,
            vec![
                (0.5, PauliString::parse("ZI").unwrap()),
                (-1.5, PauliString::parse("ZZ").unwrap()),
                (0.25, PauliString::identity(2)),
            ],
        )
        .unwrap();
        let m = obs.dense();
        for k in 0..4 {
            assert!((m[(k, k)].re - obs.diagonal_entry(k).unwrap()).abs() < 1e-12);
            assert!(m[(k, k)].im.abs() < 1e-15);
        }
    }
}

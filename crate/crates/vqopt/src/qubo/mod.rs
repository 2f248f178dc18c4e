//! QUBO problems, compilation to diagonal Ising observables, instance
//! builders (Max-Cut, TSP, integer factoring), and brute-force oracles.

pub mod file;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::quantum::pauli::{Observable, PauliLetter, PauliString};

/// Quadratic unconstrained binary optimization instance:
/// `cost(x) = xᵀQx + constant` over `x ∈ {0,1}ⁿ` with symmetric `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    n: usize,
    q: Vec<f64>,
    constant: f64,
}

impl QuboProblem {
    pub fn new(n: usize, q: Vec<f64>, constant: f64) -> Result<Self> {
        if q.len() != n * n {
            return Err(Error::Dimension(format!(
                "Q must be {n}×{n}, got {} entries",
                q.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                if (q[i * n + j] - q[j * n + i]).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "Q is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(QuboProblem { n, q, constant })
    }

    /// Builds from monomial coefficients: `coeff(i,i)` multiplies `x_i` and
    /// `coeff(i,j)` multiplies `x_i x_j` once for `i ≠ j`.
    pub fn from_monomials(
        n: usize,
        monomials: &[(usize, usize, f64)],
        constant: f64,
    ) -> Result<Self> {
        let mut q = vec![0.0; n * n];
        for &(i, j, c) in monomials {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!(
                    "variable index ({i},{j}) out of range for n={n}"
                )));
            }
            if i == j {
                q[i * n + i] += c;
            } else {
                q[i * n + j] += c / 2.0;
                q[j * n + i] += c / 2.0;
            }
        }
        QuboProblem::new(n, q, constant)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }

    /// Coefficient of the monomial `x_i x_j` (`i ≠ j`) or `x_i` (`i == j`).
    pub fn monomial_coeff(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.q(i, i)
        } else {
            self.q(i, j) + self.q(j, i)
        }
    }

    /// `cost(x)` with `x` given as bits, index 0 first.
    pub fn cost(&self, x: &[u8]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let mut acc = self.constant;
        for i in 0..self.n {
            if x[i] == 0 {
                continue;
            }
            acc += self.q(i, i);
            for j in i + 1..self.n {
                if x[j] == 1 {
                    acc += 2.0 * self.q(i, j);
                }
            }
        }
        acc
    }
}

fn bits_of_index(n: usize, index: usize) -> Vec<u8> {
    (0..n).map(|q| ((index >> (n - 1 - q)) & 1) as u8).collect()
}

fn bitstring(bits: &[u8]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

/// Compiles a QUBO to a diagonal observable via `x_i = (1 − Z_i)/2`.
///
/// The diagonal entry at basis state `|x⟩` equals `cost(x)` exactly; only
/// I/Z strings of weight ≤ 2 appear.
pub fn qubo_to_ising(q: &QuboProblem) -> Observable {
    let n = q.n();
    let mut ident = q.constant();
    let mut linear = vec![0.0; n];
    let mut quad: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for i in 0..n {
        // Q_ii x_i → Q_ii (1 − Z_i)/2
        let c = q.q(i, i);
        ident += c / 2.0;
        linear[i] -= c / 2.0;
        for j in i + 1..n {
            // full x_i x_j coefficient is 2·Q_ij
            let c = 2.0 * q.q(i, j);
            if c == 0.0 {
                continue;
            }
            ident += c / 4.0;
            linear[i] -= c / 4.0;
            linear[j] -= c / 4.0;
            *quad.entry((i, j)).or_insert(0.0) += c / 4.0;
        }
    }
    let mut terms = Vec::new();
    if ident != 0.0 {
        terms.push((ident, PauliString::identity(n)));
    }
    for (i, &c) in linear.iter().enumerate() {
        if c != 0.0 {
            terms.push((c, PauliString::single(n, i, PauliLetter::Z)));
        }
    }
    for ((i, j), c) in quad {
        if c != 0.0 {
            terms.push((
                c,
                PauliString::two(n, (i, PauliLetter::Z), (j, PauliLetter::Z)),
            ));
        }
    }
    Observable::new(n, terms).expect("compiled terms are well-formed")
}

/// Max-Cut as a QUBO: minimizing the result over `{0,1}ⁿ` yields minus the
/// maximum cut value. Edges are undirected on 0-based vertices.
pub fn build_maxcut(edges: &[(usize, usize)]) -> Result<QuboProblem> {
    if edges.is_empty() {
        return Err(Error::InvalidInput("edge list is empty".into()));
    }
    let n = edges
        .iter()
        .map(|&(a, b)| a.max(b) + 1)
        .max()
        .unwrap_or(0);
    let mut seen = std::collections::HashSet::new();
    let mut monomials = Vec::new();
    for &(a, b) in edges {
        if a == b {
            return Err(Error::InvalidInput(format!("self-loop at vertex {a}")));
        }
        let key = (a.min(b), a.max(b));
        if !seen.insert(key) {
            return Err(Error::InvalidInput(format!(
                "duplicate edge ({}, {})",
                key.0, key.1
            )));
        }
        // cut contribution x_a + x_b − 2 x_a x_b, negated for minimization
        monomials.push((a, a, -1.0));
        monomials.push((b, b, -1.0));
        monomials.push((a, b, 2.0));
    }
    QuboProblem::from_monomials(n, &monomials, 0.0)
}

/// The 4-node / 5-edge Max-Cut instance used by the benchmark configs.
pub fn maxcut_paper_graph() -> Vec<(usize, usize)> {
    vec![(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)]
}

/// Three-city traveling salesman QUBO with one-hot penalties.
///
/// City `i` at tour position `p` (both 1-based) flattens to variable
/// `3i + p − 4`. Successor positions wrap cyclically. `weights[i][j]` is the
/// intercity cost; `a` is the penalty strength.
pub fn build_tsp(weights: &[[f64; 3]; 3], a: f64) -> Result<QuboProblem> {
    for i in 0..3 {
        if weights[i][i] != 0.0 {
            return Err(Error::InvalidInput("weight diagonal must be zero".into()));
        }
        for j in 0..3 {
            if (weights[i][j] - weights[j][i]).abs() > 1e-12 {
                return Err(Error::InvalidInput("weights must be symmetric".into()));
            }
        }
    }
    if a < 0.0 {
        return Err(Error::InvalidInput("penalty must be nonnegative".into()));
    }
    let var = |i: usize, p: usize| 3 * i + p - 4; // i, p ∈ {1,2,3}
    let mut monomials = Vec::new();
    // Σ_{i,j} w_ij Σ_p x_{i,p} x_{j,p+1}, cyclic successor
    for i in 1..=3 {
        for j in 1..=3 {
            let w = weights[i - 1][j - 1];
            if w == 0.0 {
                continue;
            }
            for p in 1..=3 {
                let pp = if p == 3 { 1 } else { p + 1 };
                let (u, v) = (var(i, p), var(j, pp));
                monomials.push((u.min(v), u.max(v), w));
            }
        }
    }
    let mut constant = 0.0;
    // A Σ_p (1 − Σ_i x_{i,p})² + A Σ_i (1 − Σ_p x_{i,p})²
    let mut one_hot = |group: Vec<usize>| {
        constant += a;
        for (k, &u) in group.iter().enumerate() {
            monomials.push((u, u, -2.0 * a + a)); // −2A x + A x²
            for &v in &group[k + 1..] {
                monomials.push((u.min(v), u.max(v), 2.0 * a));
            }
        }
    };
    for p in 1..=3 {
        one_hot((1..=3).map(|i| var(i, p)).collect());
    }
    for i in 1..=3 {
        one_hot((1..=3).map(|p| var(i, p)).collect());
    }
    QuboProblem::from_monomials(9, &monomials, constant)
}

/// The benchmark TSP instance: intercity costs 48/63/91.
///
/// The penalty is 10⁵, the value consistent with the instance's documented
/// expansion (linear coefficients −200000, one-hot quadratics 200000, Ising
/// constant 600303).
pub fn tsp_paper_instance() -> QuboProblem {
    let weights = [[0.0, 48.0, 91.0], [48.0, 0.0, 63.0], [91.0, 63.0, 0.0]];
    build_tsp(&weights, 100_000.0).expect("fixed instance is valid")
}

/// Multilinear polynomial over Boolean variables, keyed by sorted variable
/// index sets. Idempotence (`x² = x`) is applied on normalization.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BooleanPolynomial {
    terms: BTreeMap<Vec<usize>, f64>,
}

impl BooleanPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::default();
        p.add_term(&[], c);
        p
    }

    pub fn variable(i: usize) -> Self {
        let mut p = Self::default();
        p.add_term(&[i], 1.0);
        p
    }

    /// Adds `c · Π_{i∈vars} x_i`, deduplicating indices (idempotence).
    pub fn add_term(&mut self, vars: &[usize], c: f64) {
        let mut key: Vec<usize> = vars.to_vec();
        key.sort_unstable();
        key.dedup();
        let entry = self.terms.entry(key).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            let mut key: Vec<usize> = vars.to_vec();
            key.sort_unstable();
            key.dedup();
            self.terms.remove(&key);
        }
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, f64> {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|k| k.len()).max().unwrap_or(0)
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.keys().filter_map(|k| k.last().copied()).max()
    }

    pub fn add(&self, other: &BooleanPolynomial) -> BooleanPolynomial {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k, *c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> BooleanPolynomial {
        let mut out = BooleanPolynomial::zero();
        for (k, c) in &self.terms {
            out.add_term(k, c * s);
        }
        out
    }

    pub fn mul(&self, other: &BooleanPolynomial) -> BooleanPolynomial {
        let mut out = BooleanPolynomial::zero();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let mut key = ka.clone();
                key.extend_from_slice(kb);
                out.add_term(&key, ca * cb);
            }
        }
        out
    }

    pub fn square(&self) -> BooleanPolynomial {
        self.mul(self)
    }

    pub fn eval(&self, x: &[u8]) -> f64 {
        let mut acc = 0.0;
        'terms: for (k, c) in &self.terms {
            for &i in k {
                if x[i] == 0 {
                    continue 'terms;
                }
            }
            acc += c;
        }
        acc
    }

    /// Compiles to a diagonal observable via `x_i = (1 − Z_i)/2`; handles any
    /// degree ≤ 4 exactly by expanding each monomial into its 2^k Z-strings.
    pub fn to_observable(&self, n_qubits: usize) -> Result<Observable> {
        let mut z_terms: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (vars, c) in &self.terms {
            if let Some(&max) = vars.last() {
                if max >= n_qubits {
                    return Err(Error::Dimension(format!(
                        "variable {max} exceeds {n_qubits} qubits"
                    )));
                }
            }
            let k = vars.len();
            let scale = c / (1usize << k) as f64;
            for subset in 0..(1usize << k) {
                let z_vars: Vec<usize> = (0..k)
                    .filter(|b| subset >> b & 1 == 1)
                    .map(|b| vars[b])
                    .collect();
                let sign = if z_vars.len() % 2 == 0 { 1.0 } else { -1.0 };
                *z_terms.entry(z_vars).or_insert(0.0) += sign * scale;
            }
        }
        let mut terms = Vec::new();
        for (z_vars, c) in z_terms {
            if c == 0.0 {
                continue;
            }
            let mut letters = vec![PauliLetter::I; n_qubits];
            for v in z_vars {
                letters[v] = PauliLetter::Z;
            }
            terms.push((c, PauliString::new(letters)));
        }
        Observable::new(n_qubits, terms)
    }
}

/// A clause of the form `(A·B + S)²` where `A`, `B` are Boolean monomials and
/// `S` an integer-valued polynomial shift.
#[derive(Debug, Clone)]
pub struct ProductClause {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub shift: BooleanPolynomial,
}

impl ProductClause {
    /// The literal clause value `(AB + S)²` as a polynomial.
    pub fn original(&self) -> BooleanPolynomial {
        let mut ab = BooleanPolynomial::zero();
        let mut vars = self.a.clone();
        vars.extend_from_slice(&self.b);
        ab.add_term(&vars, 1.0);
        ab.add(&self.shift).square()
    }
}

/// Order-reducing substitution `(AB + S)² → 2[½(A + B − ½) + S]² − 1/8`.
///
/// The two polynomials differ pointwise but share the same minimizer set
/// over Boolean assignments; the substitution eliminates the quartic terms
/// generated by squaring a product of two monomials.
pub fn reduce_quartic(clause: &ProductClause) -> Result<BooleanPolynomial> {
    if clause.a.is_empty() || clause.b.is_empty() {
        return Err(Error::InvalidInput(
            "clause factors A and B must be nonempty monomials".into(),
        ));
    }
    let mut a = BooleanPolynomial::zero();
    a.add_term(&clause.a, 1.0);
    let mut b = BooleanPolynomial::zero();
    b.add_term(&clause.b, 1.0);
    let inner = a
        .add(&b)
        .add(&BooleanPolynomial::constant(-0.5))
        .scale(0.5)
        .add(&clause.shift);
    Ok(inner
        .square()
        .scale(2.0)
        .add(&BooleanPolynomial::constant(-0.125)))
}

/// The reduced Boolean cost for factoring 143 = 13·11 over variables
/// (p₁, p₂, q₁, q₂) = qubits (0, 1, 2, 3).
///
/// Built from the clause costs `(p₁+q₁−1)² + (p₂+q₂−1)² + (p₂q₁+p₁q₂−1)²`,
/// with the quartic-generating third clause replaced through
/// [`reduce_quartic`] (A = p₁, B = q₂, S = p₂q₁ − 1).
pub fn factoring_143_polynomial() -> BooleanPolynomial {
    let (p1, p2, q1, q2) = (0usize, 1usize, 2usize, 3usize);
    let mut c1 = BooleanPolynomial::zero();
    c1.add_term(&[p1], 1.0);
    c1.add_term(&[q1], 1.0);
    c1.add_term(&[], -1.0);
    let mut c2 = BooleanPolynomial::zero();
    c2.add_term(&[p2], 1.0);
    c2.add_term(&[q2], 1.0);
    c2.add_term(&[], -1.0);
    let mut shift = BooleanPolynomial::zero();
    shift.add_term(&[p2, q1], 1.0);
    shift.add_term(&[], -1.0);
    let clause3 = ProductClause {
        a: vec![p1],
        b: vec![q2],
        shift,
    };
    let reduced3 = reduce_quartic(&clause3).expect("fixed clause shape");
    c1.square().add(&c2.square()).add(&reduced3)
}

/// The 4-qubit factoring observable compiled from
/// [`factoring_143_polynomial`].
pub fn build_factoring_143() -> Observable {
    factoring_143_polynomial()
        .to_observable(4)
        .expect("fixed polynomial compiles")
}

/// Decodes a factoring ground-state bitstring (p₁p₂q₁q₂) into the factor
/// pair via `p = 8 + 4p₂ + 2p₁ + 1`, `q = 8 + 4q₂ + 2q₁ + 1`.
pub fn decode_factors(bits: &str) -> Result<(u32, u32)> {
    let b: Vec<u32> = bits
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::InvalidInput(format!("bad bit {c:?}"))),
        })
        .collect::<Result<_>>()?;
    if b.len() != 4 {
        return Err(Error::InvalidInput("expected 4 bits".into()));
    }
    let (p1, p2, q1, q2) = (b[0], b[1], b[2], b[3]);
    Ok((8 + 4 * p2 + 2 * p1 + 1, 8 + 4 * q2 + 2 * q1 + 1))
}

const BRUTE_FORCE_QUBIT_BOUND: usize = 24;

/// Exact minimum and all minimizers of a QUBO by Gray-code enumeration.
pub fn brute_force_min(q: &QuboProblem) -> Result<(f64, Vec<String>)> {
    if q.n() > BRUTE_FORCE_QUBIT_BOUND {
        return Err(Error::Capability(format!(
            "brute force enumeration limited to {BRUTE_FORCE_QUBIT_BOUND} variables"
        )));
    }
    let n = q.n();
    let mut x = vec![0u8; n];
    let mut value = q.cost(&x);
    let mut best = value;
    let mut argmins = vec![bitstring(&x)];
    let total = 1usize << n;
    for k in 1..total {
        // Gray code: flip the bit at the lowest set position of k.
        let flip = k.trailing_zeros() as usize; // position from variable n−1 side
        let i = n - 1 - flip;
        let delta_sign = if x[i] == 0 { 1.0 } else { -1.0 };
        let mut delta = q.q(i, i);
        for j in 0..n {
            if j != i && x[j] == 1 {
                delta += 2.0 * q.q(i, j);
            }
        }
        x[i] ^= 1;
        value += delta_sign * delta;
        if value < best - 1e-12 {
            best = value;
            argmins = vec![bitstring(&x)];
        } else if (value - best).abs() <= 1e-12 {
            argmins.push(bitstring(&x));
        }
    }
    argmins.sort();
    Ok((best, argmins))
}

/// Exact minimum and all minimizers of a diagonal observable.
pub fn brute_force_min_diagonal(obs: &Observable) -> Result<(f64, Vec<String>)> {
    if !obs.is_diagonal() {
        return Err(Error::Contract(
            "brute force requires a diagonal (I/Z) observable".into(),
        ));
    }
    if obs.n_qubits() > BRUTE_FORCE_QUBIT_BOUND {
        return Err(Error::Capability(format!(
            "brute force enumeration limited to {BRUTE_FORCE_QUBIT_BOUND} qubits"
        )));
    }
    let n = obs.n_qubits();
    let mut best = f64::INFINITY;
    let mut argmins = Vec::new();
    for k in 0..(1usize << n) {
        let v = obs.diagonal_entry(k)?;
        if v < best - 1e-12 {
            best = v;
            argmins = vec![bitstring(&bits_of_index(n, k))];
        } else if (v - best).abs() <= 1e-12 {
            argmins.push(bitstring(&bits_of_index(n, k)));
        }
    }
    Ok((best, argmins))
}

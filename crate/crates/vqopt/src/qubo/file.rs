//! Plain-text QUBO problem files and the compiled Ising listing.
//!
//! Problem format, one item per line (`#` starts a comment):
//!
//! ```text
//! n 4
//! 0 0 -3
//! 0 1 2
//! const 0
//! ```
//!
//! An `i j coeff` triple gives the coefficient of the monomial `x_i x_j`
//! (`x_i` when `i == j`). The optional `const` line sets the offset. Values
//! round-trip bit-exactly through the shortest-roundtrip float formatting.

use crate::error::{Error, Result};
use crate::qubo::{qubo_to_ising, QuboProblem};

/// Parses the problem format above.
pub fn parse_problem(text: &str) -> Result<QuboProblem> {
    let mut n: Option<usize> = None;
    let mut monomials: Vec<(usize, usize, f64)> = Vec::new();
    let mut constant = 0.0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        match fields[0] {
            "n" => {
                if n.is_some() {
                    return Err(Error::Parse {
                        line,
                        msg: "duplicate n declaration".into(),
                    });
                }
                if fields.len() != 2 {
                    return Err(Error::Parse {
                        line,
                        msg: "expected `n <count>`".into(),
                    });
                }
                n = Some(fields[1].parse().map_err(|e| Error::Parse {
                    line,
                    msg: format!("bad variable count: {e}"),
                })?);
            }
            "const" => {
                if fields.len() != 2 {
                    return Err(Error::Parse {
                        line,
                        msg: "expected `const <value>`".into(),
                    });
                }
                constant = fields[1].parse().map_err(|e| Error::Parse {
                    line,
                    msg: format!("bad constant: {e}"),
                })?;
            }
            _ => {
                if fields.len() != 3 {
                    return Err(Error::Parse {
                        line,
                        msg: "expected `i j coeff`".into(),
                    });
                }
                let i: usize = fields[0].parse().map_err(|e| Error::Parse {
                    line,
                    msg: format!("bad index: {e}"),
                })?;
                let j: usize = fields[1].parse().map_err(|e| Error::Parse {
                    line,
                    msg: format!("bad index: {e}"),
                })?;
                let c: f64 = fields[2].parse().map_err(|e| Error::Parse {
                    line,
                    msg: format!("bad coefficient: {e}"),
                })?;
                monomials.push((i, j, c));
            }
        }
    }
    let n = n.ok_or(Error::Parse {
        line: 0,
        msg: "missing `n <count>` declaration".into(),
    })?;
    for &(i, j, _) in &monomials {
        if i >= n || j >= n {
            return Err(Error::Parse {
                line: 0,
                msg: format!("variable index ({i},{j}) out of range for n={n}"),
            });
        }
    }
    QuboProblem::from_monomials(n, &monomials, constant)
}

/// Writes the problem format; `parse_problem(write_problem(q))` reproduces
/// `q` bit-exactly.
pub fn write_problem(q: &QuboProblem) -> String {
    let mut out = String::new();
    out.push_str(&format!("n {}\n", q.n()));
    for i in 0..q.n() {
        for j in i..q.n() {
            let c = q.monomial_coeff(i, j);
            if c != 0.0 {
                out.push_str(&format!("{i} {j} {c}\n"));
            }
        }
    }
    if q.constant() != 0.0 {
        out.push_str(&format!("const {}\n", q.constant()));
    }
    out
}

/// Emits the compiled Ising listing: one `coeff  pauli-string` line per
/// term, non-identity strings in lexicographic order, the constant term last.
pub fn ising_listing(q: &QuboProblem) -> String {
    let obs = qubo_to_ising(q).simplified();
    let mut lines: Vec<(String, f64)> = Vec::new();
    let mut ident: Option<f64> = None;
    for (c, p) in obs.terms() {
        if p.is_identity() {
            ident = Some(*c);
        } else {
            lines.push((p.label(), *c));
        }
    }
    lines.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = String::new();
    for (label, c) in lines {
        out.push_str(&format!("{c} {label}\n"));
    }
    if let Some(c) = ident {
        out.push_str(&format!("{c} {}\n", "I".repeat(q.n())));
    }
    out
}

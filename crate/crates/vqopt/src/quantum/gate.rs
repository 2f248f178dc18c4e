use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantum::state::StateVector;

/// Supported gate kinds. Rotations follow the half-angle convention
/// `exp(−i·θ·P/2)` where `P` is the Pauli generator, so the parameter-shift
/// rule holds with shift ±π/2 and coefficient 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Rzz,
    Cz,
    Cnot,
    H,
    X,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Rzz)
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::H | GateKind::X => 1,
            GateKind::Rzz | GateKind::Cz | GateKind::Cnot => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Rzz => "rzz",
            GateKind::Cz => "cz",
            GateKind::Cnot => "cnot",
            GateKind::H => "h",
            GateKind::X => "x",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        Some(match name {
            "rx" => GateKind::Rx,
            "ry" => GateKind::Ry,
            "rz" => GateKind::Rz,
            "rzz" => GateKind::Rzz,
            "cz" => GateKind::Cz,
            "cnot" => GateKind::Cnot,
            "h" => GateKind::H,
            "x" => GateKind::X,
            _ => return None,
        })
    }
}

/// A gate slot in a circuit. Rotation gates carry either a parameter slot
/// (resolved through the circuit's slot map) or a fixed angle; exactly one of
/// the two. Non-rotations carry neither.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub parameter_slot: Option<usize>,
    pub fixed_angle: Option<f64>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>) -> Result<Self> {
        if qubits.len() != kind.arity() {
            return Err(Error::InvalidInput(format!(
                "{} acts on {} qubit(s), got {:?}",
                kind.name(),
                kind.arity(),
                qubits
            )));
        }
        if kind.arity() == 2 && qubits[0] == qubits[1] {
            return Err(Error::InvalidInput(format!(
                "{} requires two distinct qubits",
                kind.name()
            )));
        }
        Ok(Gate {
            kind,
            qubits,
            parameter_slot: None,
            fixed_angle: None,
        })
    }

    pub fn with_slot(kind: GateKind, qubits: Vec<usize>, slot: usize) -> Result<Self> {
        if !kind.is_rotation() {
            return Err(Error::InvalidInput(format!(
                "{} is not parameterizable",
                kind.name()
            )));
        }
        let mut g = Gate::new(kind, qubits)?;
        g.parameter_slot = Some(slot);
        Ok(g)
    }

    pub fn with_fixed_angle(kind: GateKind, qubits: Vec<usize>, angle: f64) -> Result<Self> {
        if !kind.is_rotation() {
            return Err(Error::InvalidInput(format!(
                "{} takes no angle",
                kind.name()
            )));
        }
        let mut g = Gate::new(kind, qubits)?;
        g.fixed_angle = Some(angle);
        Ok(g)
    }

    fn check_qubits(&self, n_qubits: usize) -> Result<()> {
        for &q in &self.qubits {
            if q >= n_qubits {
                return Err(Error::InvalidInput(format!(
                    "qubit {q} out of range for {n_qubits}-qubit state"
                )));
            }
        }
        Ok(())
    }
}

/// Applies `gate` to `state`, returning the evolved state. `angle` must be
/// supplied iff the gate is a rotation.
pub fn apply_gate(state: &StateVector, gate: &Gate, angle: Option<f64>) -> Result<StateVector> {
    let mut out = state.clone();
    apply_gate_mut(&mut out, gate, angle)?;
    Ok(out)
}

/// In-place variant used on the simulation hot path.
pub fn apply_gate_mut(state: &mut StateVector, gate: &Gate, angle: Option<f64>) -> Result<()> {
    gate.check_qubits(state.n_qubits())?;
    match (gate.kind.is_rotation(), angle) {
        (true, None) => {
            return Err(Error::InvalidInput(format!(
                "{} requires an angle",
                gate.kind.name()
            )))
        }
        (false, Some(_)) => {
            return Err(Error::InvalidInput(format!(
                "{} takes no angle",
                gate.kind.name()
            )))
        }
        _ => {}
    }
    let n = state.n_qubits();
    match gate.kind {
        GateKind::Rx => {
            let t = angle.unwrap() / 2.0;
            let c = Complex64::new(t.cos(), 0.0);
            let s = Complex64::new(0.0, -t.sin());
            apply_single(state, gate.qubits[0], [[c, s], [s, c]]);
        }
        GateKind::Ry => {
            let t = angle.unwrap() / 2.0;
            let c = Complex64::new(t.cos(), 0.0);
            let s = Complex64::new(t.sin(), 0.0);
            apply_single(state, gate.qubits[0], [[c, -s], [s, c]]);
        }
        GateKind::Rz => {
            let t = angle.unwrap() / 2.0;
            let pm = Complex64::from_polar(1.0, -t);
            let pp = Complex64::from_polar(1.0, t);
            let q = gate.qubits[0];
            for (k, a) in state.amplitudes_mut().iter_mut().enumerate() {
                let bit = (k >> (n - 1 - q)) & 1;
                *a *= if bit == 0 { pm } else { pp };
            }
        }
        GateKind::Rzz => {
            let t = angle.unwrap() / 2.0;
            let pm = Complex64::from_polar(1.0, -t);
            let pp = Complex64::from_polar(1.0, t);
            let (qa, qb) = (gate.qubits[0], gate.qubits[1]);
            for (k, a) in state.amplitudes_mut().iter_mut().enumerate() {
                let ba = (k >> (n - 1 - qa)) & 1;
                let bb = (k >> (n - 1 - qb)) & 1;
                // Z⊗Z eigenvalue +1 on equal bits, −1 otherwise.
                *a *= if ba == bb { pm } else { pp };
            }
        }
        GateKind::Cz => {
            let (qa, qb) = (gate.qubits[0], gate.qubits[1]);
            for (k, a) in state.amplitudes_mut().iter_mut().enumerate() {
                if (k >> (n - 1 - qa)) & 1 == 1 && (k >> (n - 1 - qb)) & 1 == 1 {
                    *a = -*a;
                }
            }
        }
        GateKind::Cnot => {
            let (ctrl, targ) = (gate.qubits[0], gate.qubits[1]);
            let tmask = 1usize << (n - 1 - targ);
            let amps = state.amplitudes_mut();
            for k in 0..amps.len() {
                if (k >> (n - 1 - ctrl)) & 1 == 1 && k & tmask == 0 {
                    amps.swap(k, k | tmask);
                }
            }
        }
        GateKind::H => {
            let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            apply_single(state, gate.qubits[0], [[r, r], [r, -r]]);
        }
        GateKind::X => {
            let one = Complex64::ONE;
            apply_single(state, gate.qubits[0], [[Complex64::ZERO, one], [one, Complex64::ZERO]]);
        }
    }
    Ok(())
}

/// Applies a 2×2 unitary to `qubit`.
fn apply_single(state: &mut StateVector, qubit: usize, u: [[Complex64; 2]; 2]) {
    let n = state.n_qubits();
    let stride = 1usize << (n - 1 - qubit);
    let amps = state.amplitudes_mut();
    let mut base = 0;
    while base < amps.len() {
        for k in base..base + stride {
            let a0 = amps[k];
            let a1 = amps[k + stride];
            amps[k] = u[0][0] * a0 + u[0][1] * a1;
            amps[k + stride] = u[1][0] * a0 + u[1][1] * a1;
        }
        base += 2 * stride;
    }
}

/// Dense matrix of a gate at a given angle, used by the unitarity tests.
pub fn gate_matrix(kind: GateKind, angle: Option<f64>) -> Result<Vec<Vec<Complex64>>> {
    let dim = 1usize << kind.arity();
    let mut cols = Vec::with_capacity(dim);
    for col in 0..dim {
        let n = kind.arity();
        let mut amps = vec![Complex64::ZERO; dim];
        amps[col] = Complex64::ONE;
        let mut state = StateVector::from_amplitudes(n, amps).unwrap();
        let qubits: Vec<usize> = (0..n).collect();
        let gate = Gate::new(kind, qubits)?;
        apply_gate_mut(&mut state, &gate, angle)?;
        cols.push(state.amplitudes().to_vec());
    }
    // cols[c][r] is U[r][c]; transpose into row-major.
    let mut m = vec![vec![Complex64::ZERO; dim]; dim];
    for (c, col) in cols.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            m[r][c] = *v;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ry_pi_flips_zero_to_one() {
        let s = StateVector::zero_state(1);
        let g = Gate::new(GateKind::Ry, vec![0]).unwrap();
        let out = apply_gate(&s, &g, Some(std::f64::consts::PI)).unwrap();
        assert!(out.amplitudes()[0].norm() < 1e-15);
        assert!((out.amplitudes()[1] - Complex64::ONE).norm() < 1e-15);
    }

    #[test]
    fn rzz_phases_zz_eigenstate() {
        let s = StateVector::zero_state(2);
        let g = Gate::new(GateKind::Rzz, vec![0, 1]).unwrap();
        let theta = 0.37;
        let out = apply_gate(&s, &g, Some(theta)).unwrap();
        let expected = Complex64::from_polar(1.0, -theta / 2.0);
        assert!((out.amplitudes()[0] - expected).norm() < 1e-15);
    }

    #[test]
    fn cnot_truth_table() {
        let s = StateVector::basis_state(2, "10").unwrap();
        let g = Gate::new(GateKind::Cnot, vec![0, 1]).unwrap();
        let out = apply_gate(&s, &g, None).unwrap();
        assert!((out.amplitudes()[0b11] - Complex64::ONE).norm() < 1e-15);
    }

    #[test]
    fn angle_contract_enforced() {
        let s = StateVector::zero_state(1);
        let rot = Gate::new(GateKind::Rx, vec![0]).unwrap();
        assert!(apply_gate(&s, &rot, None).is_err());
        let h = Gate::new(GateKind::H, vec![0]).unwrap();
        assert!(apply_gate(&s, &h, Some(1.0)).is_err());
    }

    #[test]
    fn out_of_range_qubit_rejected() {
        let s = StateVector::zero_state(2);
        let g = Gate::new(GateKind::X, vec![2]).unwrap();
        assert!(apply_gate(&s, &g, None).is_err());
        assert!(Gate::new(GateKind::Cz, vec![1, 1]).is_err());
    }

    #[test]
    fn gates_are_unitary_at_random_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in [
            GateKind::Rx,
            GateKind::Ry,
            GateKind::Rz,
            GateKind::Rzz,
            GateKind::Cz,
            GateKind::Cnot,
            GateKind::H,
            GateKind::X,
        ] {
            let trials = if kind.is_rotation() { 100 } else { 1 };
            for _ in 0..trials {
                let angle = if kind.is_rotation() {
                    Some(rng.random_range(-10.0..10.0))
                } else {
                    None
                };
                let u = gate_matrix(kind, angle).unwrap();
                let dim = u.len();
                for r in 0..dim {
                    for c in 0..dim {
                        // (U†U)[r][c]
                        let mut acc = Complex64::ZERO;
                        for k in 0..dim {
                            acc += u[k][r].conj() * u[k][c];
                        }
                        let expected = if r == c { 1.0 } else { 0.0 };
                        assert!(
                            (acc - expected).norm() < 1e-12,
                            "{} not unitary at {:?}",
                            kind.name(),
                            angle
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn norm_preserved_under_random_circuits() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in [2usize, 5, 10] {
            let mut state = StateVector::zero_state(n);
            for _ in 0..200 {
                let kinds = [
                    GateKind::Rx,
                    GateKind::Ry,
                    GateKind::Rz,
                    GateKind::Rzz,
                    GateKind::Cz,
                    GateKind::Cnot,
                    GateKind::H,
                    GateKind::X,
                ];
                let kind = kinds[rng.random_range(0..kinds.len())];
                let qubits = if kind.arity() == 1 {
                    vec![rng.random_range(0..n)]
                } else {
                    let a = rng.random_range(0..n);
                    let mut b = rng.random_range(0..n);
                    while b == a {
                        b = rng.random_range(0..n);
                    }
                    vec![a, b]
                };
                let angle = kind.is_rotation().then(|| rng.random_range(-6.3..6.3));
                let gate = Gate::new(kind, qubits).unwrap();
                apply_gate_mut(&mut state, &gate, angle).unwrap();
            }
            assert!((state.norm() - 1.0).abs() < 1e-10);
        }
    }
}

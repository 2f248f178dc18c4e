//! Circuit construction for the benchmark ansatz families, parameter
//! binding/execution, and exact alternating (QAOA-style) evolutions.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantum::gate::{apply_gate_mut, Gate, GateKind};
use crate::quantum::pauli::Observable;
use crate::quantum::spectral::{spectral, SpectralDecomposition};
use crate::quantum::state::StateVector;

/// Ordered parameterized gate list with a slot → parameter map. Several
/// slots may share one parameter index, which is how layer-wide rotations
/// are tied together.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    slot_map: Vec<usize>,
    d: usize,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>, slot_map: Vec<usize>) -> Result<Self> {
        let mut used = vec![false; slot_map.len()];
        for g in &gates {
            if g.kind.is_rotation() {
                match (g.parameter_slot, g.fixed_angle) {
                    (Some(slot), None) => {
                        if slot >= slot_map.len() {
                            return Err(Error::InvalidInput(format!(
                                "slot {slot} missing from slot map"
                            )));
                        }
                        used[slot] = true;
                    }
                    (None, Some(_)) => {}
                    _ => {
                        return Err(Error::InvalidInput(
                            "rotation gates need exactly one of slot or fixed angle".into(),
                        ))
                    }
                }
            } else if g.parameter_slot.is_some() || g.fixed_angle.is_some() {
                return Err(Error::InvalidInput(
                    "non-rotation gates cannot be parameterized".into(),
                ));
            }
            for &q in &g.qubits {
                if q >= n_qubits {
                    return Err(Error::InvalidInput(format!("qubit {q} out of range")));
                }
            }
        }
        if let Some(slot) = used.iter().position(|u| !u) {
            return Err(Error::InvalidInput(format!(
                "slot {slot} is mapped but never used"
            )));
        }
        let d = slot_map.iter().copied().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; d];
        for &p in &slot_map {
            seen[p] = true;
        }
        if let Some(p) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!(
                "parameter index {p} has no slot"
            )));
        }
        Ok(Circuit {
            n_qubits,
            gates,
            slot_map,
            d,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Number of distinct trainable parameters.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn slot_map(&self) -> &[usize] {
        &self.slot_map
    }

    /// Slots bound to parameter `i`, i.e. the gate occurrences the
    /// parameter-shift rule sums over.
    pub fn slots_of_parameter(&self, i: usize) -> Vec<usize> {
        self.slot_map
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == i)
            .map(|(s, _)| s)
            .collect()
    }

    fn check_binding(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.d {
            return Err(Error::Dimension(format!(
                "expected {} parameters, got {}",
                self.d,
                theta.len()
            )));
        }
        Ok(())
    }

    /// Executes with parameters bound through the slot map. `shift`, when
    /// given, adds `delta` to the angle of that single slot occurrence.
    pub fn run_shifted(
        &self,
        theta: &[f64],
        initial: &StateVector,
        shift: Option<(usize, f64)>,
    ) -> Result<StateVector> {
        self.check_binding(theta)?;
        if initial.n_qubits() != self.n_qubits {
            return Err(Error::Dimension(
                "initial state does not match circuit size".into(),
            ));
        }
        let mut state = initial.clone();
        for g in &self.gates {
            let angle = if let Some(slot) = g.parameter_slot {
                let mut a = theta[self.slot_map[slot]];
                if let Some((target, delta)) = shift {
                    if slot == target {
                        a += delta;
                    }
                }
                Some(a)
            } else {
                g.fixed_angle
            };
            apply_gate_mut(&mut state, g, angle)?;
        }
        Ok(state)
    }

    /// Plain-text gate list, one gate per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("qubits {}\n", self.n_qubits));
        out.push_str(&format!(
            "slots {}\n",
            self.slot_map
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        ));
        for g in &self.gates {
            let qubits = g
                .qubits
                .iter()
                .map(|q| format!("q{q}"))
                .collect::<Vec<_>>()
                .join(" ");
            match (g.parameter_slot, g.fixed_angle) {
                (Some(s), _) => out.push_str(&format!("{} {} slot={}\n", g.kind.name(), qubits, s)),
                (None, Some(a)) => {
                    out.push_str(&format!("{} {} angle={}\n", g.kind.name(), qubits, a))
                }
                (None, None) => out.push_str(&format!("{} {}\n", g.kind.name(), qubits)),
            }
        }
        out
    }

    /// Parses the [`Circuit::to_text`] format.
    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut n_qubits = None;
        let mut slot_map = Vec::new();
        let mut gates = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            match fields[0] {
                "qubits" => {
                    n_qubits = Some(fields.get(1).and_then(|f| f.parse().ok()).ok_or(
                        Error::Parse {
                            line,
                            msg: "expected `qubits <n>`".into(),
                        },
                    )?)
                }
                "slots" => {
                    slot_map = fields[1..]
                        .iter()
                        .map(|f| {
                            f.parse().map_err(|e| Error::Parse {
                                line,
                                msg: format!("bad slot entry: {e}"),
                            })
                        })
                        .collect::<Result<Vec<usize>>>()?;
                }
                name => {
                    let kind = GateKind::from_name(name).ok_or_else(|| Error::Parse {
                        line,
                        msg: format!("unknown gate {name:?}"),
                    })?;
                    let mut qubits = Vec::new();
                    let mut slot = None;
                    let mut angle = None;
                    for f in &fields[1..] {
                        if let Some(s) = f.strip_prefix("slot=") {
                            slot = Some(s.parse().map_err(|e| Error::Parse {
                                line,
                                msg: format!("bad slot: {e}"),
                            })?);
                        } else if let Some(a) = f.strip_prefix("angle=") {
                            angle = Some(a.parse().map_err(|e| Error::Parse {
                                line,
                                msg: format!("bad angle: {e}"),
                            })?);
                        } else if let Some(q) = f.strip_prefix('q') {
                            qubits.push(q.parse().map_err(|e| Error::Parse {
                                line,
                                msg: format!("bad qubit: {e}"),
                            })?);
                        } else {
                            return Err(Error::Parse {
                                line,
                                msg: format!("unexpected field {f:?}"),
                            });
                        }
                    }
                    let mut gate = Gate::new(kind, qubits).map_err(|e| Error::Parse {
                        line,
                        msg: e.to_string(),
                    })?;
                    gate.parameter_slot = slot;
                    gate.fixed_angle = angle;
                    gates.push(gate);
                }
            }
        }
        Circuit::new(
            n_qubits.ok_or(Error::Parse {
                line: 0,
                msg: "missing `qubits` line".into(),
            })?,
            gates,
            slot_map,
        )
    }
}

/// Executes `circuit` on `initial` with parameters bound through the slot
/// map. Deterministic; shared slots receive the same value.
pub fn bind_and_run(
    circuit: &Circuit,
    theta: &[f64],
    initial: &StateVector,
) -> Result<StateVector> {
    circuit.run_shifted(theta, initial, None)
}

fn validate_sizes(n: usize, layers: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need N ≥ 2 qubits, got {n}")));
    }
    if layers < 1 {
        return Err(Error::InvalidInput("need at least one layer".into()));
    }
    Ok(())
}

/// QAOA-like chain ansatz: a fixed RY(3π/2) layer, then per layer one shared
/// RZZ angle over the chain bonds (brickwork order: even bonds, then odd)
/// followed by one shared RX angle on every qubit. `d = 2·layers`.
pub fn build_qaoa_like_tfim(n: usize, layers: usize) -> Result<Circuit> {
    validate_sizes(n, layers)?;
    let mut gates = Vec::new();
    let mut slot_map = Vec::new();
    for q in 0..n {
        gates.push(Gate::with_fixed_angle(GateKind::Ry, vec![q], 1.5 * PI)?);
    }
    for layer in 0..layers {
        let zz_param = 2 * layer;
        let x_param = 2 * layer + 1;
        for parity in [0usize, 1] {
            for b in (parity..n - 1).step_by(2) {
                let slot = slot_map.len();
                slot_map.push(zz_param);
                gates.push(Gate::with_slot(GateKind::Rzz, vec![b, b + 1], slot)?);
            }
        }
        for q in 0..n {
            let slot = slot_map.len();
            slot_map.push(x_param);
            gates.push(Gate::with_slot(GateKind::Rx, vec![q], slot)?);
        }
    }
    let c = Circuit::new(n, gates, slot_map)?;
    debug_assert_eq!(c.d(), 2 * layers);
    Ok(c)
}

/// Hardware-efficient ansatz: per entangling block an RY and an RZ rotation
/// on every qubit (all distinct parameters) followed by the all-pairs CX
/// ladder, with a trailing rotation block. `d = 2·N·(layers + 1)`.
pub fn build_hea(n: usize, layers: usize) -> Result<Circuit> {
    validate_sizes(n, layers)?;
    let mut gates = Vec::new();
    let mut slot_map = Vec::new();
    let mut next_param = 0usize;
    let mut rotation_layer = |gates: &mut Vec<Gate>,
                              slot_map: &mut Vec<usize>,
                              kind: GateKind|
     -> Result<()> {
        for q in 0..n {
            let slot = slot_map.len();
            slot_map.push(next_param);
            next_param += 1;
            gates.push(Gate::with_slot(kind, vec![q], slot)?);
        }
        Ok(())
    };
    for _ in 0..layers {
        rotation_layer(&mut gates, &mut slot_map, GateKind::Ry)?;
        rotation_layer(&mut gates, &mut slot_map, GateKind::Rz)?;
        for c in 0..n {
            for t in c + 1..n {
                gates.push(Gate::new(GateKind::Cnot, vec![c, t])?);
            }
        }
    }
    rotation_layer(&mut gates, &mut slot_map, GateKind::Ry)?;
    rotation_layer(&mut gates, &mut slot_map, GateKind::Rz)?;
    let c = Circuit::new(n, gates, slot_map)?;
    debug_assert_eq!(c.d(), 2 * n * (layers + 1));
    Ok(c)
}

/// QUBO ansatz: per layer an RY rotation on every qubit (distinct
/// parameters) followed by the CZ chain (0,1),(1,2),…. `d = N·layers`.
/// QUBO runs start from `|+⟩^⊗N`.
pub fn build_qubo_ansatz(n: usize, layers: usize) -> Result<Circuit> {
    validate_sizes(n, layers)?;
    let mut gates = Vec::new();
    let mut slot_map = Vec::new();
    for layer in 0..layers {
        for q in 0..n {
            let slot = slot_map.len();
            slot_map.push(layer * n + q);
            gates.push(Gate::with_slot(GateKind::Ry, vec![q], slot)?);
        }
        for b in 0..n - 1 {
            gates.push(Gate::new(GateKind::Cz, vec![b, b + 1])?);
        }
    }
    let c = Circuit::new(n, gates, slot_map)?;
    debug_assert_eq!(c.d(), n * layers);
    Ok(c)
}

/// Alternating exact evolution
/// `|ψ(θ)⟩ = e^{−iH₂β_p} e^{−iH₁α_p} ⋯ e^{−iH₂β₁} e^{−iH₁α₁} |ψ_i⟩`
/// with parameters ordered (α₁, β₁, …, α_p, β_p), so `d = 2p`.
#[derive(Debug, Clone)]
pub struct AlternatingEvolution {
    h1: Observable,
    h2: Observable,
    p: usize,
    initial: StateVector,
    spec1: Arc<SpectralDecomposition>,
    spec2: Arc<SpectralDecomposition>,
}

impl AlternatingEvolution {
    pub fn new(h1: Observable, h2: Observable, p: usize, initial: StateVector) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidInput("need p ≥ 1 layers".into()));
        }
        if h1.n_qubits() != h2.n_qubits() || initial.n_qubits() != h1.n_qubits() {
            return Err(Error::Dimension(
                "H₁, H₂ and the initial state must share the qubit count".into(),
            ));
        }
        let spec1 = spectral(&h1)?;
        let spec2 = spectral(&h2)?;
        Ok(AlternatingEvolution {
            h1,
            h2,
            p,
            initial,
            spec1,
            spec2,
        })
    }

    pub fn d(&self) -> usize {
        2 * self.p
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n_qubits(&self) -> usize {
        self.h1.n_qubits()
    }

    pub fn initial(&self) -> &StateVector {
        &self.initial
    }

    pub fn h1(&self) -> &Observable {
        &self.h1
    }

    pub fn h2(&self) -> &Observable {
        &self.h2
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.d() {
            return Err(Error::Dimension(format!(
                "expected {} parameters, got {}",
                self.d(),
                theta.len()
            )));
        }
        Ok(())
    }

    pub fn run(&self, theta: &[f64]) -> Result<StateVector> {
        self.check(theta)?;
        let mut state = self.initial.clone();
        for layer in 0..self.p {
            state = self.spec1.evolve(&state, theta[2 * layer])?;
            state = self.spec2.evolve(&state, theta[2 * layer + 1])?;
        }
        Ok(state)
    }

    /// Final state together with `∂|ψ(θ)⟩/∂θ_i`: the factor `−iH` inserted
    /// at parameter `i`'s position in the product.
    pub fn run_with_derivative(
        &self,
        theta: &[f64],
        i: usize,
    ) -> Result<(StateVector, StateVector)> {
        self.check(theta)?;
        if i >= self.d() {
            return Err(Error::InvalidInput(format!("parameter {i} out of range")));
        }
        let mut state = self.initial.clone();
        let mut deriv: Option<StateVector> = None;
        for layer in 0..self.p {
            for half in 0..2 {
                let (spec, h) = if half == 0 {
                    (&self.spec1, &self.h1)
                } else {
                    (&self.spec2, &self.h2)
                };
                let angle = theta[2 * layer + half];
                state = spec.evolve(&state, angle)?;
                if let Some(d) = deriv.take() {
                    deriv = Some(spec.evolve(&d, angle)?);
                }
                if 2 * layer + half == i {
                    deriv = Some(apply_neg_i_h(h, &state));
                }
            }
        }
        Ok((state, deriv.expect("parameter index visited")))
    }
}

/// `−iH|ψ⟩` accumulated term by term; the result is unnormalized.
fn apply_neg_i_h(h: &Observable, state: &StateVector) -> StateVector {
    let n = state.n_qubits();
    let mut out = vec![Complex64::ZERO; state.dim()];
    for (c, p) in h.terms() {
        let applied = p.apply_to_amplitudes(n, state.amplitudes());
        let scale = Complex64::new(0.0, -c);
        for (o, a) in out.iter_mut().zip(applied) {
            *o += scale * a;
        }
    }
    StateVector::raw(n, out)
}

/// Runs the alternating evolution; parameters ordered (α₁, β₁, …, α_p, β_p),
/// applied right to left as written in the product.
pub fn run_alternating(evo: &AlternatingEvolution, theta: &[f64]) -> Result<StateVector> {
    evo.run(theta)
}

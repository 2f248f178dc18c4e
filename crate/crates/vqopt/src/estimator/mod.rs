//! The noisy oracle: cost evaluation, parameter-shift partial derivatives,
//! full gradients, and SPSA finite-difference estimates, with pluggable
//! noise models and evaluation accounting.

pub mod synthetic;

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ansatz::{AlternatingEvolution, Circuit};
use crate::error::{Error, Result};
use crate::hamiltonians::FidelityTarget;
use crate::quantum::pauli::{
    expectation, sample_bernoulli_mean, sample_mean_from_expectation, Observable,
};
use crate::quantum::state::StateVector;

/// Measurement-noise model applied to cost and derivative evaluations.
///
/// `Gaussian` perturbs returned values directly with independent draws;
/// `Shots` samples every Pauli term (or the fidelity projector) from the
/// finite-shot distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    Exact,
    Gaussian { sigma_cost: f64, sigma_partial: f64 },
    Shots { shots: u64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::Exact => Ok(()),
            NoiseModel::Gaussian {
                sigma_cost,
                sigma_partial,
            } => {
                if *sigma_cost < 0.0 || *sigma_partial < 0.0 {
                    Err(Error::InvalidInput("noise σ must be ≥ 0".into()))
                } else {
                    Ok(())
                }
            }
            NoiseModel::Shots { shots } => {
                if *shots == 0 {
                    Err(Error::InvalidInput("shots must be ≥ 1".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, NoiseModel::Exact)
    }
}

/// What the cost measures on the prepared state.
#[derive(Debug, Clone)]
pub enum CostKernel {
    /// `f(θ) = ⟨ψ(θ)|H|ψ(θ)⟩`
    Energy(Observable),
    /// `f(θ) = 1 − Σ_k |⟨b_k|ψ(θ)⟩|²`
    Fidelity(FidelityTarget),
}

/// State preparation: either a bound gate circuit or an exact alternating
/// evolution. Immutable and shareable.
#[derive(Debug, Clone)]
pub enum StateRunner {
    Gates {
        circuit: Circuit,
        initial: StateVector,
    },
    Alternating(AlternatingEvolution),
}

impl StateRunner {
    pub fn d(&self) -> usize {
        match self {
            StateRunner::Gates { circuit, .. } => circuit.d(),
            StateRunner::Alternating(evo) => evo.d(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            StateRunner::Gates { circuit, .. } => circuit.n_qubits(),
            StateRunner::Alternating(evo) => evo.n_qubits(),
        }
    }

    pub fn final_state(&self, theta: &[f64]) -> Result<StateVector> {
        match self {
            StateRunner::Gates { circuit, initial } => {
                circuit.run_shifted(theta, initial, None)
            }
            StateRunner::Alternating(evo) => evo.run(theta),
        }
    }
}

/// Monotone evaluation counters; partials are the complexity unit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounts {
    pub cost_evals: u64,
    pub partial_evals: u64,
}

/// A gradient (or gradient surrogate) with its accounting charge:
/// `d` for full gradients, 1 for single partials and SPSA estimates.
#[derive(Debug, Clone)]
pub struct GradientEstimate {
    pub values: Vec<f64>,
    pub evals_charged: u64,
}

/// Noisy objective interface shared by circuit cost functions and synthetic
/// test functions. Instances own their RNG streams; clones for concurrent
/// trials must be created with distinct seeds.
pub trait Objective {
    fn dim(&self) -> usize;
    /// Noisy cost; increments `cost_evals`.
    fn noisy_cost(&mut self, theta: &[f64]) -> Result<f64>;
    /// Noisy partial derivative; increments `partial_evals`.
    fn noisy_partial(&mut self, theta: &[f64], i: usize) -> Result<f64>;
    /// Noise-free cost (the reporting channel).
    fn exact_cost(&self, theta: &[f64]) -> Result<f64>;
    /// Noise-free gradient.
    fn exact_gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.exact_partial(theta, i))
            .collect()
    }
    /// Noise-free partial derivative.
    fn exact_partial(&self, theta: &[f64], i: usize) -> Result<f64>;
    /// Noisy cost drawn from the dedicated reporting stream: trace rows can
    /// record a noisy cost without perturbing the training stream, so
    /// trajectories do not depend on the recording cadence. No counter.
    fn report_cost(&mut self, theta: &[f64]) -> Result<f64>;
    fn counts(&self) -> EvalCounts;
}

/// Noisy full gradient: `d` partial derivatives, charged as `d` evals.
pub fn full_gradient<O: Objective + ?Sized>(
    obj: &mut O,
    theta: &[f64],
) -> Result<GradientEstimate> {
    let d = obj.dim();
    let mut values = Vec::with_capacity(d);
    for i in 0..d {
        values.push(obj.noisy_partial(theta, i)?);
    }
    Ok(GradientEstimate {
        values,
        evals_charged: d as u64,
    })
}

/// Two-point SPSA estimate with a Rademacher direction:
/// `[f(θ+cΔ) − f(θ−cΔ)]/(2c) · Δ` componentwise (Δᵢ = ±1, so Δᵢ⁻¹ = Δᵢ).
///
/// Charges two cost evaluations on the objective; for eval-count comparisons
/// one estimate counts as one equivalent partial.
pub fn spsa_estimate<O: Objective + ?Sized, R: Rng>(
    obj: &mut O,
    theta: &[f64],
    c: f64,
    rng: &mut R,
) -> Result<GradientEstimate> {
    if c <= 0.0 {
        return Err(Error::InvalidInput("SPSA perturbation c must be > 0".into()));
    }
    let d = obj.dim();
    let delta: Vec<f64> = (0..d)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let plus: Vec<f64> = theta.iter().zip(&delta).map(|(t, dl)| t + c * dl).collect();
    let minus: Vec<f64> = theta.iter().zip(&delta).map(|(t, dl)| t - c * dl).collect();
    let fp = obj.noisy_cost(&plus)?;
    let fm = obj.noisy_cost(&minus)?;
    let scale = (fp - fm) / (2.0 * c);
    Ok(GradientEstimate {
        values: delta.iter().map(|dl| scale * dl).collect(),
        evals_charged: 1,
    })
}

/// The noisy oracle for circuit costs.
///
/// The optimized value is `(kernel(θ) − offset)/scale`; the affine map
/// defaults to the identity and exists so workloads with large energy
/// scales can be driven in normalized units (the shift cancels out of every
/// derivative; the scale divides them).
#[derive(Debug, Clone)]
pub struct CostFunction {
    runner: StateRunner,
    kernel: CostKernel,
    noise: NoiseModel,
    offset: f64,
    scale: f64,
    rng: ChaCha8Rng,
    report_rng: ChaCha8Rng,
    counts: EvalCounts,
}

impl CostFunction {
    pub fn new(
        runner: StateRunner,
        kernel: CostKernel,
        noise: NoiseModel,
        seed: u64,
    ) -> Result<Self> {
        noise.validate()?;
        let n = runner.n_qubits();
        match &kernel {
            CostKernel::Energy(obs) => {
                if obs.n_qubits() != n {
                    return Err(Error::Dimension(
                        "observable does not match circuit size".into(),
                    ));
                }
            }
            CostKernel::Fidelity(t) => {
                if t.n_qubits() != n {
                    return Err(Error::Dimension(
                        "fidelity target does not match circuit size".into(),
                    ));
                }
            }
        }
        Ok(CostFunction {
            runner,
            kernel,
            noise,
            offset: 0.0,
            scale: 1.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            report_rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15),
            counts: EvalCounts::default(),
        })
    }

    /// Re-expresses the cost as `(kernel − offset)/scale`.
    pub fn with_cost_affine(mut self, offset: f64, scale: f64) -> Result<Self> {
        if scale <= 0.0 || !scale.is_finite() || !offset.is_finite() {
            return Err(Error::InvalidInput(
                "cost affine needs finite offset and scale > 0".into(),
            ));
        }
        self.offset = offset;
        self.scale = scale;
        Ok(self)
    }

    pub fn runner(&self) -> &StateRunner {
        &self.runner
    }

    pub fn kernel(&self) -> &CostKernel {
        &self.kernel
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn d(&self) -> usize {
        self.runner.d()
    }

    pub fn final_state(&self, theta: &[f64]) -> Result<StateVector> {
        self.runner.final_state(theta)
    }

    fn kernel_exact(&self, state: &StateVector) -> Result<f64> {
        let raw = match &self.kernel {
            CostKernel::Energy(obs) => expectation(state, obs)?,
            CostKernel::Fidelity(target) => target.cost(state)?,
        };
        Ok((raw - self.offset) / self.scale)
    }

    fn kernel_sampled<R: Rng>(&self, state: &StateVector, shots: u64, rng: &mut R) -> Result<f64> {
        let raw = match &self.kernel {
            CostKernel::Energy(obs) => {
                let mut acc = 0.0;
                for (c, p) in obs.terms() {
                    let mean = p.expectation(state)?;
                    acc += c * sample_mean_from_expectation(mean, shots, rng)?;
                }
                acc
            }
            CostKernel::Fidelity(target) => {
                let f = target.fidelity(state)?;
                1.0 - sample_bernoulli_mean(f, shots, rng)?
            }
        };
        Ok((raw - self.offset) / self.scale)
    }

    fn shifted_slots(&self, i: usize) -> Result<Vec<usize>> {
        match &self.runner {
            StateRunner::Gates { circuit, .. } => Ok(circuit.slots_of_parameter(i)),
            StateRunner::Alternating(_) => Err(Error::Contract(
                "parameter-shift sampling requires a gate circuit".into(),
            )),
        }
    }

    fn shifted_state(&self, theta: &[f64], slot: usize, delta: f64) -> Result<StateVector> {
        match &self.runner {
            StateRunner::Gates { circuit, initial } => {
                circuit.run_shifted(theta, initial, Some((slot, delta)))
            }
            StateRunner::Alternating(_) => unreachable!("guarded by shifted_slots"),
        }
    }

    /// Noise-free cost.
    pub fn cost_exact(&self, theta: &[f64]) -> Result<f64> {
        self.kernel_exact(&self.runner.final_state(theta)?)
    }

    /// Noise-free partial derivative. Gate circuits use the parameter-shift
    /// rule (exact under the half-angle convention: the shift is ±π/2 with
    /// coefficient 1/2, summed over the parameter's gate occurrences);
    /// alternating evolutions differentiate the evolution analytically.
    pub fn partial_exact(&self, theta: &[f64], i: usize) -> Result<f64> {
        self.check_index(theta, i)?;
        match &self.runner {
            StateRunner::Gates { circuit, .. } => {
                let mut acc = 0.0;
                for slot in circuit.slots_of_parameter(i) {
                    let plus = self.kernel_exact(&self.shifted_state(theta, slot, FRAC_PI_2)?)?;
                    let minus =
                        self.kernel_exact(&self.shifted_state(theta, slot, -FRAC_PI_2)?)?;
                    acc += 0.5 * (plus - minus);
                }
                Ok(acc)
            }
            StateRunner::Alternating(evo) => {
                let (state, dstate) = evo.run_with_derivative(theta, i)?;
                match &self.kernel {
                    CostKernel::Energy(obs) => {
                        // ∂⟨H⟩ = 2·Re⟨ψ|H|∂ψ⟩
                        let n = state.n_qubits();
                        let mut hd = vec![Complex64::ZERO; state.dim()];
                        for (c, p) in obs.terms() {
                            let applied = p.apply_to_amplitudes(n, dstate.amplitudes());
                            for (o, a) in hd.iter_mut().zip(applied) {
                                *o += Complex64::new(*c, 0.0) * a;
                            }
                        }
                        Ok(2.0
                            * state
                                .amplitudes()
                                .iter()
                                .zip(&hd)
                                .map(|(a, b)| (a.conj() * b).re)
                                .sum::<f64>()
                            / self.scale)
                    }
                    CostKernel::Fidelity(target) => {
                        // ∂(1 − Σ|⟨b|ψ⟩|²) = −2 Σ Re(⟨b|ψ⟩* ⟨b|∂ψ⟩)
                        let mut acc = 0.0;
                        for b in target.basis() {
                            let o = b.inner(&state);
                            let od = b.inner(&dstate);
                            acc -= 2.0 * (o.conj() * od).re;
                        }
                        Ok(acc / self.scale)
                    }
                }
            }
        }
    }

    fn check_index(&self, theta: &[f64], i: usize) -> Result<()> {
        if theta.len() != self.d() {
            return Err(Error::Dimension(format!(
                "expected {} parameters, got {}",
                self.d(),
                theta.len()
            )));
        }
        if i >= self.d() {
            return Err(Error::InvalidInput(format!(
                "parameter index {i} out of range (d = {})",
                self.d()
            )));
        }
        Ok(())
    }

    fn noisy_cost_with<R: Rng>(&self, theta: &[f64], rng: &mut R) -> Result<f64> {
        match &self.noise {
            NoiseModel::Exact => self.cost_exact(theta),
            NoiseModel::Gaussian { sigma_cost, .. } => {
                let noise: f64 = rng.sample(StandardNormal);
                Ok(self.cost_exact(theta)? + sigma_cost * noise)
            }
            NoiseModel::Shots { shots } => {
                let state = self.runner.final_state(theta)?;
                self.kernel_sampled(&state, *shots, rng)
            }
        }
    }

    /// Frozen per-direction sampler for repeated shot-noise partial
    /// estimates at a fixed θ (noise histograms). Draws are identical in
    /// distribution — and, given the same RNG state, bit-identical — to
    /// [`Objective::noisy_partial`] under `Shots`.
    pub fn freeze_shots_partial(&self, theta: &[f64], i: usize) -> Result<FrozenShotsPartial> {
        let NoiseModel::Shots { shots } = self.noise else {
            return Err(Error::Contract(
                "freeze_shots_partial requires the Shots noise model".into(),
            ));
        };
        self.check_index(theta, i)?;
        let mut evals = Vec::new();
        for slot in self.shifted_slots(i)? {
            for delta in [FRAC_PI_2, -FRAC_PI_2] {
                let state = self.shifted_state(theta, slot, delta)?;
                let sign = if delta > 0.0 { 0.5 } else { -0.5 };
                let eval = match &self.kernel {
                    CostKernel::Energy(obs) => {
                        let terms = obs
                            .terms()
                            .iter()
                            .map(|(c, p)| Ok((*c, p.expectation(&state)?)))
                            .collect::<Result<Vec<_>>>()?;
                        FrozenEval::Energy { terms }
                    }
                    CostKernel::Fidelity(target) => FrozenEval::Fidelity {
                        fidelity: target.fidelity(&state)?,
                    },
                };
                evals.push((sign, eval));
            }
        }
        Ok(FrozenShotsPartial {
            evals,
            shots,
            scale: self.scale,
        })
    }
}

impl Objective for CostFunction {
    fn dim(&self) -> usize {
        self.d()
    }

    fn noisy_cost(&mut self, theta: &[f64]) -> Result<f64> {
        let mut rng = std::mem::replace(&mut self.rng, ChaCha8Rng::seed_from_u64(0));
        let out = self.noisy_cost_with(theta, &mut rng);
        self.rng = rng;
        self.counts.cost_evals += 1;
        out
    }

    fn noisy_partial(&mut self, theta: &[f64], i: usize) -> Result<f64> {
        self.check_index(theta, i)?;
        let out = match self.noise.clone() {
            NoiseModel::Exact => self.partial_exact(theta, i),
            NoiseModel::Gaussian { sigma_partial, .. } => {
                let noise: f64 = self.rng.sample(StandardNormal);
                Ok(self.partial_exact(theta, i)? + sigma_partial * noise)
            }
            NoiseModel::Shots { shots } => {
                let slots = self.shifted_slots(i)?;
                let mut rng = std::mem::replace(&mut self.rng, ChaCha8Rng::seed_from_u64(0));
                let mut acc = 0.0;
                let mut failed = None;
                'outer: for slot in slots {
                    for delta in [FRAC_PI_2, -FRAC_PI_2] {
                        let sign = if delta > 0.0 { 0.5 } else { -0.5 };
                        match self
                            .shifted_state(theta, slot, delta)
                            .and_then(|s| self.kernel_sampled(&s, shots, &mut rng))
                        {
                            Ok(v) => acc += sign * v,
                            Err(e) => {
                                failed = Some(e);
                                break 'outer;
                            }
                        }
                    }
                }
                self.rng = rng;
                match failed {
                    Some(e) => Err(e),
                    None => Ok(acc),
                }
            }
        };
        self.counts.partial_evals += 1;
        out
    }

    fn exact_cost(&self, theta: &[f64]) -> Result<f64> {
        self.cost_exact(theta)
    }

    fn exact_partial(&self, theta: &[f64], i: usize) -> Result<f64> {
        self.partial_exact(theta, i)
    }

    fn report_cost(&mut self, theta: &[f64]) -> Result<f64> {
        let mut rng = std::mem::replace(&mut self.report_rng, ChaCha8Rng::seed_from_u64(0));
        let out = self.noisy_cost_with(theta, &mut rng);
        self.report_rng = rng;
        out
    }

    fn counts(&self) -> EvalCounts {
        self.counts
    }
}

/// Frozen shot-noise sampler for one partial-derivative direction.
#[derive(Debug, Clone)]
pub struct FrozenShotsPartial {
    evals: Vec<(f64, FrozenEval)>,
    shots: u64,
    scale: f64,
}

#[derive(Debug, Clone)]
enum FrozenEval {
    Energy { terms: Vec<(f64, f64)> },
    Fidelity { fidelity: f64 },
}

impl FrozenShotsPartial {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<f64> {
        self.sample_with_shots(self.shots, rng)
    }

    /// Sampling at an overridden shot count (1/√m scaling checks).
    pub fn sample_with_shots<R: Rng>(&self, shots: u64, rng: &mut R) -> Result<f64> {
        let mut acc = 0.0;
        for (sign, eval) in &self.evals {
            let value = match eval {
                FrozenEval::Energy { terms } => {
                    let mut v = 0.0;
                    for (c, mean) in terms {
                        v += c * sample_mean_from_expectation(*mean, shots, rng)?;
                    }
                    v
                }
                FrozenEval::Fidelity { fidelity } => {
                    1.0 - sample_bernoulli_mean(*fidelity, shots, rng)?
                }
            };
            acc += sign * value;
        }
        Ok(acc / self.scale)
    }

    /// Noise-free value of the frozen estimator (its expectation).
    pub fn mean(&self) -> f64 {
        self.evals
            .iter()
            .map(|(sign, eval)| {
                sign * match eval {
                    FrozenEval::Energy { terms } => {
                        terms.iter().map(|(c, m)| c * m).sum::<f64>()
                    }
                    FrozenEval::Fidelity { fidelity } => 1.0 - fidelity,
                }
            })
            .sum::<f64>()
            / self.scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_hea, build_qaoa_like_tfim, build_qubo_ansatz};
    use crate::hamiltonians::build_tfim;
    use crate::quantum::gate::GateKind;
    use crate::quantum::pauli::PauliString;
    use rand::Rng;

    fn ry_z_cost(noise: NoiseModel, seed: u64) -> CostFunction {
        // One RY on one qubit measuring ⟨Z⟩: f(θ) = cos θ.
        let gate = crate::quantum::gate::Gate::with_slot(GateKind::Ry, vec![0], 0).unwrap();
        let circuit = Circuit::new(1, vec![gate], vec![0]).unwrap();
        let obs = Observable::new(1, vec![(1.0, PauliString::parse("Z").unwrap())]).unwrap();
        CostFunction::new(
            StateRunner::Gates {
                circuit,
                initial: StateVector::zero_state(1),
            },
            CostKernel::Energy(obs),
            noise,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn parameter_shift_closed_form() {
        let cf = ry_z_cost(NoiseModel::Exact, 0);
        let theta = [FRAC_PI_2];
        assert!(cf.cost_exact(&theta).unwrap().abs() < 1e-12);
        assert!((cf.partial_exact(&theta, 0).unwrap() - (-1.0)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_sigma_zero_is_exact_bitwise() {
        let mut noisy = ry_z_cost(
            NoiseModel::Gaussian {
                sigma_cost: 0.0,
                sigma_partial: 0.0,
            },
            7,
        );
        let mut exact = ry_z_cost(NoiseModel::Exact, 7);
        for theta in [[0.3], [1.2], [-0.8]] {
            assert_eq!(
                noisy.noisy_cost(&theta).unwrap(),
                exact.noisy_cost(&theta).unwrap()
            );
            assert_eq!(
                noisy.noisy_partial(&theta, 0).unwrap(),
                exact.noisy_partial(&theta, 0).unwrap()
            );
        }
    }

    #[test]
    fn shots_cost_variance_matches_formula() {
        // Var[f̂] = Σ_k c_k²(1−⟨P_k⟩²)/m for independent term sampling.
        let n = 3;
        let circuit = build_qaoa_like_tfim(n, 2).unwrap();
        let obs = build_tfim(n, 1.0, 1.5).unwrap();
        let theta = [0.4, -0.2, 0.7, 0.3];
        let shots = 1000u64;
        let mut cf = CostFunction::new(
            StateRunner::Gates {
                circuit: circuit.clone(),
                initial: StateVector::zero_state(n),
            },
            CostKernel::Energy(obs.clone()),
            NoiseModel::Shots { shots },
            21,
        )
        .unwrap();
        let state = cf.final_state(&theta).unwrap();
        let predicted_var: f64 = obs
            .terms()
            .iter()
            .map(|(c, p)| {
                let m = p.expectation(&state).unwrap();
                c * c * (1.0 - m * m) / shots as f64
            })
            .sum();
        let reps = 3000;
        let samples: Vec<f64> = (0..reps)
            .map(|_| cf.noisy_cost(&theta).unwrap())
            .collect();
        let mean = samples.iter().sum::<f64>() / reps as f64;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / reps as f64;
        assert!(
            (var.sqrt() - predicted_var.sqrt()).abs() < 0.15 * predicted_var.sqrt(),
            "std {} vs predicted {}",
            var.sqrt(),
            predicted_var.sqrt()
        );
    }

    #[test]
    fn partials_match_finite_differences() {
        let n = 4;
        let circuit = build_qaoa_like_tfim(n, 3).unwrap();
        let obs = build_tfim(n, 1.0, 1.5).unwrap();
        let cf = CostFunction::new(
            StateRunner::Gates {
                circuit,
                initial: StateVector::zero_state(n),
            },
            CostKernel::Energy(obs),
            NoiseModel::Exact,
            0,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = cf.d();
        let theta: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let h = 1e-5;
        for i in 0..d {
            let mut tp = theta.clone();
            tp[i] += h;
            let mut tm = theta.clone();
            tm[i] -= h;
            let fd = (cf.cost_exact(&tp).unwrap() - cf.cost_exact(&tm).unwrap()) / (2.0 * h);
            let ps = cf.partial_exact(&theta, i).unwrap();
            assert!((fd - ps).abs() < 1e-6, "param {i}: {fd} vs {ps}");
        }
    }

    #[test]
    fn gaussian_partial_is_unbiased() {
        let sigma = 0.1;
        let mut cf = ry_z_cost(
            NoiseModel::Gaussian {
                sigma_cost: 0.0,
                sigma_partial: sigma,
            },
            31,
        );
        let theta = [0.9];
        let truth = cf.partial_exact(&theta, 0).unwrap();
        let reps = 10_000;
        let mean: f64 = (0..reps)
            .map(|_| cf.noisy_partial(&theta, 0).unwrap())
            .sum::<f64>()
            / reps as f64;
        assert!((mean - truth).abs() < 3.0 * sigma / (reps as f64).sqrt());
    }

    #[test]
    fn full_gradient_matches_finite_differences_on_hea() {
        let n = 3;
        let circuit = build_hea(n, 1).unwrap();
        let obs = build_tfim(n, 1.0, 1.5).unwrap();
        let mut cf = CostFunction::new(
            StateRunner::Gates {
                circuit,
                initial: StateVector::zero_state(n),
            },
            CostKernel::Energy(obs),
            NoiseModel::Exact,
            0,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = cf.d();
        let theta: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let grad = full_gradient(&mut cf, &theta).unwrap();
        assert_eq!(grad.evals_charged, d as u64);
        assert_eq!(cf.counts().partial_evals, d as u64);
        let h = 1e-5;
        for i in 0..d {
            let mut tp = theta.clone();
            tp[i] += h;
            let mut tm = theta.clone();
            tm[i] -= h;
            let fd = (cf.cost_exact(&tp).unwrap() - cf.cost_exact(&tm).unwrap()) / (2.0 * h);
            assert!((fd - grad.values[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn single_parameter_gradient_equals_partial() {
        let mut cf = ry_z_cost(NoiseModel::Exact, 0);
        let theta = [0.7];
        let grad = full_gradient(&mut cf, &theta).unwrap();
        let partial = cf.noisy_partial(&theta, 0).unwrap();
        assert_eq!(grad.values[0], partial);
    }

    #[test]
    fn spsa_quadratic_algebra() {
        // f = ‖θ‖²/2 exact: estimateᵢ = (θᵀΔ)·Δᵢ; the mean over Δ is θᵢ.
        let mut obj = synthetic::QuadraticObjective::isotropic(4, 0.0, 0.0, 3);
        let theta = [0.5, -1.0, 2.0, 0.25];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut mean = vec![0.0; 4];
        let reps = 20_000;
        for _ in 0..reps {
            let est = spsa_estimate(&mut obj, &theta, 1e-3, &mut rng).unwrap();
            for (m, v) in mean.iter_mut().zip(est.values) {
                *m += v / reps as f64;
            }
        }
        for (m, t) in mean.iter().zip(theta) {
            assert!((m - t).abs() < 0.05, "{m} vs {t}");
        }
        assert_eq!(obj.counts().cost_evals, 2 * reps);
    }

    #[test]
    fn spsa_small_c_matches_directional_derivative() {
        let n = 3;
        let circuit = build_qubo_ansatz(n, 2).unwrap();
        let obs = build_tfim(n, 1.0, 1.5).unwrap();
        let mut cf = CostFunction::new(
            StateRunner::Gates {
                circuit,
                initial: StateVector::plus_state(n),
            },
            CostKernel::Energy(obs),
            NoiseModel::Exact,
            0,
        )
        .unwrap();
        let theta: Vec<f64> = (0..cf.d()).map(|i| 0.1 * i as f64 - 0.2).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let est = spsa_estimate(&mut cf, &theta, 1e-6, &mut rng).unwrap();
        assert_eq!(est.evals_charged, 1);
        // Recover Δ from the signs: estimate = (∇f·Δ)Δ + O(c²).
        let grad = cf.exact_gradient(&theta).unwrap();
        let delta: Vec<f64> = est.values.iter().map(|v| v.signum()).collect();
        let dir: f64 = grad.iter().zip(&delta).map(|(g, d)| g * d).sum();
        for (v, d) in est.values.iter().zip(&delta) {
            assert!((v - dir * d).abs() < 1e-4, "{v} vs {}", dir * d);
        }
    }

    #[test]
    fn spsa_noise_scales_inversely_with_c() {
        let sigma = 0.5;
        let mut obj = synthetic::QuadraticObjective::isotropic(3, sigma, 0.0, 17);
        let theta = [0.0, 0.0, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let std_at = |c: f64, obj: &mut synthetic::QuadraticObjective,
                      rng: &mut ChaCha8Rng| {
            let reps = 4000;
            let samples: Vec<f64> = (0..reps)
                .map(|_| spsa_estimate(obj, &theta, c, rng).unwrap().values[0])
                .collect();
            let mean = samples.iter().sum::<f64>() / reps as f64;
            (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / reps as f64).sqrt()
        };
        let s1 = std_at(0.05, &mut obj, &mut rng);
        let s2 = std_at(0.1, &mut obj, &mut rng);
        let ratio = s1 / s2;
        assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn shots_partial_matches_frozen_sampler_bitwise() {
        let n = 3;
        let circuit = build_qaoa_like_tfim(n, 2).unwrap();
        let obs = build_tfim(n, 1.0, 1.5).unwrap();
        let mk = || {
            CostFunction::new(
                StateRunner::Gates {
                    circuit: circuit.clone(),
                    initial: StateVector::zero_state(n),
                },
                CostKernel::Energy(obs.clone()),
                NoiseModel::Shots { shots: 200 },
                123,
            )
            .unwrap()
        };
        let theta = [0.3, -0.5, 0.8, 0.1];
        let mut live = mk();
        let frozen = mk().freeze_shots_partial(&theta, 1).unwrap();
        // Same seed → same stream → identical draws.
        let mut frozen_rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..16 {
            let a = live.noisy_partial(&theta, 1).unwrap();
            let b = frozen.sample(&mut frozen_rng).unwrap();
            assert_eq!(a, b);
        }
        assert!((frozen.mean() - live.partial_exact(&theta, 1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn shots_partial_rejects_alternating() {
        let h1 = build_tfim(2, 1.0, 1.5).unwrap();
        let x = Observable::new(
            2,
            vec![
                (1.0, PauliString::parse("XI").unwrap()),
                (1.0, PauliString::parse("IX").unwrap()),
            ],
        )
        .unwrap();
        let evo = AlternatingEvolution::new(h1.clone(), x, 2, StateVector::plus_state(2)).unwrap();
        let mut cf = CostFunction::new(
            StateRunner::Alternating(evo),
            CostKernel::Energy(h1),
            NoiseModel::Shots { shots: 100 },
            0,
        )
        .unwrap();
        assert!(matches!(
            cf.noisy_partial(&[0.1, 0.2, 0.3, 0.4], 0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn index_and_length_validation() {
        let mut cf = ry_z_cost(NoiseModel::Exact, 0);
        assert!(cf.noisy_partial(&[0.1], 3).is_err());
        assert!(cf.noisy_cost(&[0.1, 0.2]).is_err());
    }
}

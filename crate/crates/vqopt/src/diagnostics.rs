//! Lipschitz-constant estimation along trajectories, PL-constant
//! estimation, and the noisy-descent stability experiment.
//!
//! Lipschitz constants are local (pointwise Hessian) quantities: the global
//! supremum is not computable for circuit costs, so reports here estimate
//! the Hessian at a point by central finite differences and read the
//! constants off it. Default step: 1e-3 radians (trigonometric costs with
//! curvature of order one).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimator::{CostFunction, Objective};
use crate::stats;

/// Default finite-difference step for circuit costs.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// Pointwise smoothness constants at a parameter vector.
#[derive(Debug, Clone)]
pub struct LipschitzReport {
    /// Hessian spectral norm.
    pub l: f64,
    /// Componentwise constants `|∂²f/∂θᵢ²|`.
    pub l_i: Vec<f64>,
    pub l_max: f64,
    pub l_avg: f64,
    pub ratio_avg: f64,
    pub ratio_max: f64,
}

impl LipschitzReport {
    /// The chain `L_avg ≤ L_max ≤ L ≤ d·L_max`, with relative slack.
    pub fn satisfies_chain(&self, tol: f64) -> bool {
        let d = self.l_i.len() as f64;
        self.l_avg <= self.l_max * (1.0 + tol)
            && self.l_max <= self.l * (1.0 + tol)
            && self.l <= d * self.l_max * (1.0 + tol)
    }
}

/// Central second differences: `H_ii` from the 3-point stencil, `H_ij` from
/// the 4-point stencil, symmetrized.
pub fn hessian_fd_fn<F>(f: F, theta: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if h <= 0.0 {
        return Err(Error::InvalidInput("finite-difference step must be > 0".into()));
    }
    let d = theta.len();
    let f0 = f(theta)?;
    let mut m = DMatrix::<f64>::zeros(d, d);
    let mut probe = theta.to_vec();
    for i in 0..d {
        probe[i] = theta[i] + h;
        let fp = f(&probe)?;
        probe[i] = theta[i] - h;
        let fm = f(&probe)?;
        probe[i] = theta[i];
        m[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
    }
    for i in 0..d {
        for j in i + 1..d {
            let mut eval = |si: f64, sj: f64| -> Result<f64> {
                probe[i] = theta[i] + si * h;
                probe[j] = theta[j] + sj * h;
                let v = f(&probe)?;
                probe[i] = theta[i];
                probe[j] = theta[j];
                Ok(v)
            };
            let v = (eval(1.0, 1.0)? - eval(1.0, -1.0)? - eval(-1.0, 1.0)?
                + eval(-1.0, -1.0)?)
                / (4.0 * h * h);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

fn require_exact(cost: &CostFunction) -> Result<()> {
    if !cost.noise().is_exact() {
        return Err(Error::Contract(
            "Hessian estimation requires the Exact noise model".into(),
        ));
    }
    Ok(())
}

/// Finite-difference Hessian of a circuit cost (Exact model only).
pub fn hessian_fd(cost: &CostFunction, theta: &[f64], h: f64) -> Result<DMatrix<f64>> {
    require_exact(cost)?;
    hessian_fd_fn(|t| cost.cost_exact(t), theta, h)
}

/// Spectral norm of a symmetric matrix by power iteration on `H²`.
pub fn spectral_norm(m: &DMatrix<f64>, tol: f64, max_iters: usize) -> Result<f64> {
    let d = m.nrows();
    if d == 0 {
        return Ok(0.0);
    }
    // Deterministic, slightly asymmetric start so a symmetric iterate cannot
    // sit exactly orthogonal to the dominant eigenspace.
    let mut v = DVector::<f64>::from_fn(d, |i, _| 1.0 + 1e-3 * (i + 1) as f64);
    v /= v.norm();
    let mut prev = f64::INFINITY;
    for _ in 0..max_iters {
        let w = m * (m * &v);
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let est = norm.sqrt();
        if (est - prev).abs() <= tol * est.max(1.0) {
            return Ok(est);
        }
        prev = est;
        v = w / norm;
    }
    Err(Error::Diagnostic(format!(
        "power iteration did not converge within {max_iters} iterations"
    )))
}

fn report_from_hessian(m: &DMatrix<f64>) -> Result<LipschitzReport> {
    let d = m.nrows();
    let l = spectral_norm(m, 1e-8, 1000)?;
    let l_i: Vec<f64> = (0..d).map(|i| m[(i, i)].abs()).collect();
    let l_max = l_i.iter().cloned().fold(0.0, f64::max);
    let l_avg = l_i.iter().sum::<f64>() / d as f64;
    Ok(LipschitzReport {
        l,
        l_i,
        l_max,
        l_avg,
        ratio_avg: if l_avg > 0.0 { l / l_avg } else { f64::NAN },
        ratio_max: if l_max > 0.0 { l / l_max } else { f64::NAN },
    })
}

/// Pointwise Lipschitz report for a circuit cost (Exact model only).
pub fn lipschitz_at(cost: &CostFunction, theta: &[f64], h: f64) -> Result<LipschitzReport> {
    require_exact(cost)?;
    report_from_hessian(&hessian_fd(cost, theta, h)?)
}

/// Pointwise Lipschitz report for an arbitrary exact cost.
pub fn lipschitz_at_fn<F>(f: F, theta: &[f64], h: f64) -> Result<LipschitzReport>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    report_from_hessian(&hessian_fd_fn(f, theta, h)?)
}

/// Empirical local PL constant from trajectory samples.
#[derive(Debug, Clone)]
pub struct PLEstimate {
    /// `min over samples of ‖∇f‖² / (2(f − f_min))`.
    pub mu_hat: f64,
    /// Samples entering the minimum.
    pub sample_count: usize,
    /// Samples excluded for sitting within 1e-8 of the minimum value.
    pub excluded: usize,
    pub f_min_reference: f64,
}

/// Estimates the PL constant over the given parameter samples.
pub fn estimate_pl<F, G>(
    f: F,
    gradient: G,
    samples: &[Vec<f64>],
    f_min: f64,
) -> Result<PLEstimate>
where
    F: Fn(&[f64]) -> Result<f64>,
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if samples.is_empty() {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let mut mu_hat = f64::INFINITY;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for theta in samples {
        let gap = f(theta)? - f_min;
        if gap <= 1e-8 {
            excluded += 1;
            continue;
        }
        let g = gradient(theta)?;
        let g2: f64 = g.iter().map(|v| v * v).sum();
        mu_hat = mu_hat.min(g2 / (2.0 * gap));
        used += 1;
    }
    if used == 0 {
        return Err(Error::Diagnostic(
            "all samples sit at the minimum; PL estimate undefined".into(),
        ));
    }
    Ok(PLEstimate {
        mu_hat,
        sample_count: used,
        excluded,
        f_min_reference: f_min,
    })
}

/// Per-learning-rate escape statistics from noisy gradient descent.
#[derive(Debug, Clone)]
pub struct StabilityRow {
    pub learning_rate: f64,
    pub escape_frequency: f64,
    pub trials: usize,
    /// The loss floor `L·a·σ²·d/μ` below which a trial counts as settled.
    pub floor: f64,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    /// Rank correlation between learning rate and escape frequency.
    pub spearman: f64,
    pub f_initial: f64,
}

/// Parameters for [`stability_experiment`]. The basin threshold `delta_f`
/// and the constants μ, L, σ are caller-supplied references: on synthetic
/// quadratics they are the planted values, on circuit costs no theoretical
/// column is claimed.
#[derive(Debug, Clone)]
pub struct StabilityParams {
    pub a_grid: Vec<f64>,
    pub trials_per_a: usize,
    pub delta_f: f64,
    pub mu: f64,
    pub lipschitz: f64,
    pub sigma: f64,
    pub max_iters: usize,
    pub seed: u64,
}

/// Runs noisy gradient descent over a learning-rate grid and reports, per
/// rate, the fraction of trials whose exact loss reaches `delta_f` (escape)
/// before first dropping to the floor `L·a·σ²·d/μ`. Trials that hit neither
/// within `max_iters` count as settled.
pub fn stability_experiment<O, F>(
    factory: F,
    theta0: &[f64],
    params: &StabilityParams,
) -> Result<StabilityReport>
where
    O: Objective,
    F: Fn(u64) -> O,
{
    if params.a_grid.is_empty() {
        return Err(Error::InvalidInput("empty learning-rate grid".into()));
    }
    let d = theta0.len() as f64;
    let mut rows = Vec::with_capacity(params.a_grid.len());
    let probe = factory(0);
    let f_initial = probe.exact_cost(theta0)?;
    for (ai, &a) in params.a_grid.iter().enumerate() {
        let floor = params.lipschitz * a * params.sigma * params.sigma * d / params.mu;
        let mut escapes = 0usize;
        for trial in 0..params.trials_per_a {
            let seed = params
                .seed
                .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul((ai * params.trials_per_a + trial + 1) as u64));
            let mut obj = factory(seed);
            let mut theta = theta0.to_vec();
            for _ in 0..params.max_iters {
                let f = obj.exact_cost(&theta)?;
                if f >= params.delta_f {
                    escapes += 1;
                    break;
                }
                if f <= floor {
                    break;
                }
                let g = crate::estimator::full_gradient(&mut obj, &theta)?;
                for (t, gi) in theta.iter_mut().zip(&g.values) {
                    *t -= a * gi;
                }
                if theta.iter().any(|t| !t.is_finite()) {
                    escapes += 1;
                    break;
                }
            }
        }
        rows.push(StabilityRow {
            learning_rate: a,
            escape_frequency: escapes as f64 / params.trials_per_a as f64,
            trials: params.trials_per_a,
            floor,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.learning_rate).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.escape_frequency).collect();
    Ok(StabilityReport {
        rows,
        spearman: stats::spearman(&xs, &ys),
        f_initial,
    })
}

/// Samples θ uniformly from `[−scale, scale]^d` (trajectory surrogates for
/// PL estimation in tests and examples).
pub fn uniform_samples(d: usize, scale: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..d).map(|_| rng.random_range(-scale..scale)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::build_hea;
    use crate::estimator::synthetic::QuadraticObjective;
    use crate::estimator::{CostKernel, NoiseModel, StateRunner};
    use crate::hamiltonians::build_tfim;
    use crate::quantum::state::StateVector;

    fn ones_quadratic() -> impl Fn(&[f64]) -> Result<f64> {
        // f = (Σθᵢ)²/2: Hessian is the all-ones matrix, L = d, L_max = 1.
        |theta: &[f64]| Ok(0.5 * theta.iter().sum::<f64>().powi(2))
    }

    #[test]
    fn hessian_recovers_quadratic() {
        let a = [[2.0, 0.5, 0.0], [0.5, 1.0, -0.3], [0.0, -0.3, 4.0]];
        let f = |t: &[f64]| {
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    acc += 0.5 * a[i][j] * t[i] * t[j];
                }
            }
            Ok(acc)
        };
        let h = hessian_fd_fn(f, &[0.3, -0.2, 0.9], 1e-3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((h[(i, j)] - a[i][j]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn hessian_of_planted_anisotropic_quadratic() {
        let h = hessian_fd_fn(ones_quadratic(), &[0.1, 0.2, -0.3, 0.0, 0.4], 1e-3).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert!((h[(i, j)] - 1.0).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn hessian_symmetric_on_circuit_cost() {
        let n = 3;
        let cf = CostFunction::new(
            StateRunner::Gates {
                circuit: build_hea(n, 1).unwrap(),
                initial: StateVector::zero_state(n),
            },
            CostKernel::Energy(build_tfim(n, 1.0, 1.5).unwrap()),
            NoiseModel::Exact,
            0,
        )
        .unwrap();
        let theta = uniform_samples(cf.d(), 3.0, 1, 5).remove(0);
        let h = hessian_fd(&cf, &theta, 1e-3).unwrap();
        for i in 0..cf.d() {
            for j in 0..cf.d() {
                assert!((h[(i, j)] - h[(j, i)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn hessian_rejects_noisy_model() {
        let cf = CostFunction::new(
            StateRunner::Gates {
                circuit: build_hea(2, 1).unwrap(),
                initial: StateVector::zero_state(2),
            },
            CostKernel::Energy(build_tfim(2, 1.0, 1.5).unwrap()),
            NoiseModel::Gaussian {
                sigma_cost: 0.1,
                sigma_partial: 0.1,
            },
            0,
        )
        .unwrap();
        assert!(matches!(
            hessian_fd(&cf, &[0.0; 8], 1e-3),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn lipschitz_diagonal_quadratic() {
        // f = ½θᵀdiag(2,4,6)θ: diagonal Hessian, so L = L_max = 6.
        let f = |t: &[f64]| Ok(0.5 * (2.0 * t[0] * t[0] + 4.0 * t[1] * t[1] + 6.0 * t[2] * t[2]));
        let r = lipschitz_at_fn(f, &[0.5, 0.5, 0.5], 1e-3).unwrap();
        assert!((r.l - 6.0).abs() < 1e-4);
        assert!((r.l_max - 6.0).abs() < 1e-4);
        assert!((r.ratio_max - 1.0).abs() < 1e-4);
        assert!(r.satisfies_chain(1e-6));
    }

    #[test]
    fn lipschitz_anisotropic_quadratic() {
        // L = d·L_max for the rank-one all-ones Hessian.
        let r = lipschitz_at_fn(ones_quadratic(), &[0.0; 5], 1e-3).unwrap();
        assert!((r.l - 5.0).abs() < 1e-4);
        assert!((r.l_max - 1.0).abs() < 1e-4);
        assert!((r.ratio_max - 5.0).abs() < 1e-3);
        assert!(r.satisfies_chain(1e-6));
    }

    #[test]
    fn lipschitz_quadratic_relative_accuracy() {
        let lambda = [0.7, 3.0, 11.0, 0.2];
        let f = move |t: &[f64]| {
            Ok(0.5
                * t.iter()
                    .zip(lambda.iter())
                    .map(|(x, l)| l * x * x)
                    .sum::<f64>())
        };
        let r = lipschitz_at_fn(f, &[1.0, -2.0, 0.5, 0.25], 1e-3).unwrap();
        assert!((r.l - 11.0).abs() / 11.0 < 1e-4);
    }

    #[test]
    fn power_iteration_handles_zero_matrix() {
        let m = DMatrix::<f64>::zeros(4, 4);
        assert_eq!(spectral_norm(&m, 1e-8, 100).unwrap(), 0.0);
    }

    #[test]
    fn pl_estimate_equality_case() {
        let mu = 0.37;
        let f = move |t: &[f64]| Ok(0.5 * mu * t.iter().map(|x| x * x).sum::<f64>());
        let g = move |t: &[f64]| Ok(t.iter().map(|x| mu * x).collect());
        let samples = uniform_samples(3, 2.0, 20, 7);
        let est = estimate_pl(f, g, &samples, 0.0).unwrap();
        assert!((est.mu_hat - mu).abs() < 1e-10);
        assert_eq!(est.sample_count, 20);
        assert_eq!(est.excluded, 0);
    }

    #[test]
    fn pl_fails_for_quartic_near_origin() {
        // f = θ⁴ has no positive PL constant at 0: μ̂ → 0 with the samples.
        let f = |t: &[f64]| Ok(t[0].powi(4));
        let g = |t: &[f64]| Ok(vec![4.0 * t[0].powi(3)]);
        let far = estimate_pl(f, g, &[vec![0.5]], 0.0).unwrap().mu_hat;
        let near = estimate_pl(f, g, &[vec![0.04]], 0.0).unwrap().mu_hat;
        assert!(near < far / 100.0);

        assert!(matches!(
            estimate_pl(f, g, &[vec![0.0]], 0.0),
            Err(Error::Diagnostic(_))
        ));
    }

    #[test]
    fn stability_frozen_dynamics_never_escape() {
        let lambda = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let theta0 = vec![0.1; 5];
        let params = StabilityParams {
            a_grid: vec![1e-9],
            trials_per_a: 20,
            delta_f: 1.0,
            mu: 1.0,
            lipschitz: 5.0,
            sigma: 0.1,
            max_iters: 200,
            seed: 3,
        };
        let report = stability_experiment(
            |seed| QuadraticObjective::new(lambda.clone(), 0.0, 0.1, seed).unwrap(),
            &theta0,
            &params,
        )
        .unwrap();
        assert_eq!(report.rows[0].escape_frequency, 0.0);
    }
}

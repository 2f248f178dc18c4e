//! The three optimizers — noisy gradient descent, noisy random coordinate
//! descent, and SPSA — with budgets, stopping rules, and trace recording.
//!
//! GD and RCD use constant learning rates; only SPSA takes a decay
//! schedule. The optimizer consumes noisy values while the trace's exact
//! column is recomputed on the reporting channel, so plots show true
//! progress.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::diagnostics;
use crate::error::{Error as LibError, Result};
use crate::estimator::{full_gradient, spsa_estimate, Objective, StateRunner};
use crate::hamiltonians::FidelityTarget;

/// Divergence is declared when the exact cost magnitude crosses this bound
/// or any parameter stops being finite.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

/// SPSA decay schedule: `a_k = a/(k+1+A)^α`, `c_k = c/(k+1)^γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpsaSchedule {
    pub a: f64,
    pub big_a: f64,
    pub alpha: f64,
    pub c: f64,
    pub gamma: f64,
}

impl SpsaSchedule {
    /// Spall's standard exponents with no stability offset.
    pub fn standard(a: f64, c: f64) -> Self {
        SpsaSchedule {
            a,
            big_a: 0.0,
            alpha: 0.602,
            c,
            gamma: 0.101,
        }
    }

    pub fn rate_at(&self, k: u64) -> f64 {
        self.a / ((k + 1) as f64 + self.big_a).powf(self.alpha)
    }

    pub fn perturbation_at(&self, k: u64) -> f64 {
        self.c / ((k + 1) as f64).powf(self.gamma)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Gd,
    Rcd,
    Spsa(SpsaSchedule),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::Rcd => "rcd",
            Method::Spsa(_) => "spsa",
        }
    }
}

/// Early-stop target checked on the reporting channel at record points.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    CostAtMost(f64),
    MetricAtLeast(f64),
}

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub method: Method,
    /// Constant learning rate for GD/RCD (ignored by SPSA).
    pub learning_rate: f64,
    /// Budget in partial-derivative evaluations (SPSA: equivalent evals).
    pub max_partial_evals: u64,
    pub target: Option<Target>,
    pub seed: u64,
    pub record_every: u64,
    /// Finite-difference step for per-record Lipschitz columns; None
    /// disables the diagnostics columns.
    pub diagnostics_h: Option<f64>,
}

impl OptimizerConfig {
    pub fn new(method: Method, learning_rate: f64, max_partial_evals: u64, seed: u64) -> Self {
        OptimizerConfig {
            method,
            learning_rate,
            max_partial_evals,
            target: None,
            seed,
            record_every: 1,
            diagnostics_h: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_partial_evals == 0 {
            return Err(LibError::InvalidInput("budget must be > 0".into()));
        }
        if self.record_every == 0 {
            return Err(LibError::InvalidInput("record_every must be ≥ 1".into()));
        }
        match &self.method {
            Method::Spsa(s) => {
                if s.a <= 0.0 || s.c <= 0.0 {
                    return Err(LibError::InvalidInput(
                        "SPSA schedule needs a > 0 and c > 0".into(),
                    ));
                }
            }
            _ => {
                if self.learning_rate < 0.0 {
                    return Err(LibError::InvalidInput("learning rate must be ≥ 0".into()));
                }
            }
        }
        Ok(())
    }
}

/// Computes the plotted metric from θ and the exact cost.
pub trait Reporter: Sync {
    fn metric_name(&self) -> &str;
    fn metric(&self, theta: &[f64], exact_cost: f64) -> Result<Option<f64>>;
}

/// No metric column (synthetic objectives).
pub struct NoMetric;

impl Reporter for NoMetric {
    fn metric_name(&self) -> &str {
        ""
    }
    fn metric(&self, _theta: &[f64], _exact_cost: f64) -> Result<Option<f64>> {
        Ok(None)
    }
}

/// `(E − c)/(E_GS − c)`; `shift = 0` gives the plain energy ratio.
pub struct EnergyRatio {
    pub ground_energy: f64,
    pub shift: f64,
}

impl Reporter for EnergyRatio {
    fn metric_name(&self) -> &str {
        "energy_ratio"
    }
    fn metric(&self, _theta: &[f64], exact_cost: f64) -> Result<Option<f64>> {
        Ok(Some(
            (exact_cost - self.shift) / (self.ground_energy - self.shift),
        ))
    }
}

/// Fidelity read off a fidelity-kernel cost: `F = 1 − f`.
pub struct FidelityFromCost;

impl Reporter for FidelityFromCost {
    fn metric_name(&self) -> &str {
        "fidelity"
    }
    fn metric(&self, _theta: &[f64], exact_cost: f64) -> Result<Option<f64>> {
        Ok(Some(1.0 - exact_cost))
    }
}

/// Fidelity of the prepared state against a target ground space, for
/// energy-kernel runs that also plot fidelity.
pub struct StateFidelity {
    pub runner: StateRunner,
    pub target: FidelityTarget,
}

impl Reporter for StateFidelity {
    fn metric_name(&self) -> &str {
        "fidelity"
    }
    fn metric(&self, theta: &[f64], _exact_cost: f64) -> Result<Option<f64>> {
        let state = self.runner.final_state(theta)?;
        Ok(Some(self.target.fidelity(&state)?))
    }
}

/// One recorded trace row. `i_n` is the coordinate updated at iteration `n`
/// (RCD only). The Lipschitz triple is present when diagnostics are on.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub n: u64,
    pub partial_evals: u64,
    pub cost_noisy: f64,
    pub cost_exact: f64,
    pub metric: Option<f64>,
    pub i_n: Option<usize>,
    pub lipschitz: Option<(f64, f64, f64)>,
}

/// Per-run optimization record.
#[derive(Debug, Clone)]
pub struct Trace {
    pub method: String,
    pub metric_name: String,
    pub rows: Vec<TraceRow>,
    /// θ snapshots at record points, keyed by iteration.
    pub checkpoints: Vec<(u64, Vec<f64>)>,
    pub final_theta: Vec<f64>,
    pub final_partial_evals: u64,
    pub target_reached: bool,
    pub diverged: Option<String>,
}

impl Trace {
    /// CSV with the fixed column order
    /// `n,partial_evals,cost_noisy,cost_exact,metric,i_n,L,L_avg,L_max`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,partial_evals,cost_noisy,cost_exact,metric,i_n,L,L_avg,L_max\n");
        for r in &self.rows {
            let metric = r.metric.map(|m| m.to_string()).unwrap_or_default();
            let i_n = r.i_n.map(|i| i as i64).unwrap_or(-1);
            let (l, lavg, lmax) = match r.lipschitz {
                Some((l, lavg, lmax)) => (l.to_string(), lavg.to_string(), lmax.to_string()),
                None => (String::new(), String::new(), String::new()),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.n, r.partial_evals, r.cost_noisy, r.cost_exact, metric, i_n, l, lavg, lmax
            ));
        }
        out
    }

    /// First recorded eval count at which the metric reached `threshold`.
    pub fn first_evals_reaching_metric(&self, threshold: f64) -> Option<u64> {
        self.rows
            .iter()
            .find(|r| r.metric.is_some_and(|m| m >= threshold))
            .map(|r| r.partial_evals)
    }

    pub fn first_evals_reaching_cost(&self, threshold: f64) -> Option<u64> {
        self.rows
            .iter()
            .find(|r| r.cost_exact <= threshold)
            .map(|r| r.partial_evals)
    }

    pub fn final_metric(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.metric)
    }
}

/// A run that diverged still carries its trace.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("optimization diverged: {reason}")]
    Diverged { reason: String, trace: Box<Trace> },
    #[error(transparent)]
    Estimator(#[from] LibError),
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives independent deterministic seeds for parallel streams.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream))
}

fn record_row<O: Objective + ?Sized, R: Reporter + ?Sized>(
    obj: &mut O,
    reporter: &R,
    diagnostics_h: Option<f64>,
    n: u64,
    evals: u64,
    theta: &[f64],
    i_n: Option<usize>,
) -> Result<TraceRow> {
    let cost_noisy = obj.report_cost(theta)?;
    let cost_exact = obj.exact_cost(theta)?;
    let metric = reporter.metric(theta, cost_exact)?;
    let lipschitz = match diagnostics_h {
        Some(h) => {
            let r = diagnostics::lipschitz_at_fn(|t| obj.exact_cost(t), theta, h)?;
            Some((r.l, r.l_avg, r.l_max))
        }
        None => None,
    };
    Ok(TraceRow {
        n,
        partial_evals: evals,
        cost_noisy,
        cost_exact,
        metric,
        i_n,
        lipschitz,
    })
}

/// Shared optimizer loop.
pub fn run<O: Objective + ?Sized, R: Reporter + ?Sized>(
    obj: &mut O,
    theta0: &[f64],
    cfg: &OptimizerConfig,
    reporter: &R,
) -> std::result::Result<Trace, RunError> {
    cfg.validate()?;
    let d = obj.dim();
    if theta0.len() != d {
        return Err(RunError::Estimator(LibError::Dimension(format!(
            "θ₀ has length {}, objective dimension is {d}",
            theta0.len()
        ))));
    }
    let per_iter: u64 = match cfg.method {
        Method::Gd => d as u64,
        Method::Rcd | Method::Spsa(_) => 1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1));
    let mut theta = theta0.to_vec();
    let mut trace = Trace {
        method: cfg.method.name().to_string(),
        metric_name: reporter.metric_name().to_string(),
        rows: Vec::new(),
        checkpoints: Vec::new(),
        final_theta: theta.clone(),
        final_partial_evals: 0,
        target_reached: false,
        diverged: None,
    };

    let mut evals: u64 = 0;
    let mut n: u64 = 0;
    let row = record_row(obj, reporter, cfg.diagnostics_h, 0, 0, &theta, None)?;
    let target_hit = |row: &TraceRow, target: &Option<Target>| match target {
        Some(Target::CostAtMost(eps)) => row.cost_exact <= *eps,
        Some(Target::MetricAtLeast(phi)) => row.metric.is_some_and(|m| m >= *phi),
        None => false,
    };
    trace.target_reached = target_hit(&row, &cfg.target);
    trace.rows.push(row);
    trace.checkpoints.push((0, theta.clone()));

    while !trace.target_reached && evals + per_iter <= cfg.max_partial_evals {
        n += 1;
        let mut i_n = None;
        match &cfg.method {
            Method::Gd => {
                let g = full_gradient(obj, &theta)?;
                for (t, gi) in theta.iter_mut().zip(&g.values) {
                    *t -= cfg.learning_rate * gi;
                }
            }
            Method::Rcd => {
                let i = rng.random_range(0..d);
                let p = obj.noisy_partial(&theta, i)?;
                theta[i] -= cfg.learning_rate * p;
                i_n = Some(i);
            }
            Method::Spsa(schedule) => {
                let k = n - 1;
                let est = spsa_estimate(obj, &theta, schedule.perturbation_at(k), &mut rng)?;
                let a_k = schedule.rate_at(k);
                for (t, gi) in theta.iter_mut().zip(&est.values) {
                    *t -= a_k * gi;
                }
            }
        }
        evals += per_iter;
        if theta.iter().any(|t| !t.is_finite()) {
            trace.final_theta = theta.clone();
            trace.final_partial_evals = evals;
            let reason = format!("non-finite parameter at iteration {n}");
            trace.diverged = Some(reason.clone());
            return Err(RunError::Diverged {
                reason,
                trace: Box::new(trace),
            });
        }
        let budget_exhausted = evals + per_iter > cfg.max_partial_evals;
        if n % cfg.record_every == 0 || budget_exhausted {
            let row = record_row(obj, reporter, cfg.diagnostics_h, n, evals, &theta, i_n)?;
            let exceeded = row.cost_exact.abs() > DIVERGENCE_THRESHOLD;
            trace.target_reached = target_hit(&row, &cfg.target);
            trace.rows.push(row);
            trace.checkpoints.push((n, theta.clone()));
            if exceeded {
                trace.final_theta = theta.clone();
                trace.final_partial_evals = evals;
                let reason = format!(
                    "cost magnitude above {DIVERGENCE_THRESHOLD:e} at iteration {n}"
                );
                trace.diverged = Some(reason.clone());
                return Err(RunError::Diverged {
                    reason,
                    trace: Box::new(trace),
                });
            }
        }
    }
    trace.final_theta = theta;
    trace.final_partial_evals = evals;
    Ok(trace)
}

/// Noisy gradient descent `θ ← θ − a·g(θ)`.
pub fn run_gd<O: Objective + ?Sized, R: Reporter + ?Sized>(
    obj: &mut O,
    theta0: &[f64],
    cfg: &OptimizerConfig,
    reporter: &R,
) -> std::result::Result<Trace, RunError> {
    require_method(cfg, "gd")?;
    run(obj, theta0, cfg, reporter)
}

/// Noisy random coordinate descent: one uniformly drawn coordinate per
/// iteration, one partial-derivative evaluation charged.
pub fn run_rcd<O: Objective + ?Sized, R: Reporter + ?Sized>(
    obj: &mut O,
    theta0: &[f64],
    cfg: &OptimizerConfig,
    reporter: &R,
) -> std::result::Result<Trace, RunError> {
    require_method(cfg, "rcd")?;
    run(obj, theta0, cfg, reporter)
}

/// SPSA with decaying rate and perturbation.
pub fn run_spsa<O: Objective + ?Sized, R: Reporter + ?Sized>(
    obj: &mut O,
    theta0: &[f64],
    cfg: &OptimizerConfig,
    reporter: &R,
) -> std::result::Result<Trace, RunError> {
    require_method(cfg, "spsa")?;
    run(obj, theta0, cfg, reporter)
}

fn require_method(cfg: &OptimizerConfig, expect: &str) -> Result<()> {
    if cfg.method.name() != expect {
        return Err(LibError::InvalidInput(format!(
            "config method is {}, expected {expect}",
            cfg.method.name()
        )));
    }
    Ok(())
}

/// Mean and min–max band of a batch of traces on a common eval grid.
#[derive(Debug, Clone)]
pub struct Summary {
    pub metric_name: String,
    pub grid: Vec<u64>,
    pub cost_mean: Vec<f64>,
    pub cost_min: Vec<f64>,
    pub cost_max: Vec<f64>,
    pub metric_mean: Vec<f64>,
    pub metric_min: Vec<f64>,
    pub metric_max: Vec<f64>,
    pub has_metric: bool,
}

impl Summary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "partial_evals,cost_exact_mean,cost_exact_min,cost_exact_max,metric_mean,metric_min,metric_max\n",
        );
        for (k, &evals) in self.grid.iter().enumerate() {
            let metric = if self.has_metric {
                format!(
                    "{},{},{}",
                    self.metric_mean[k], self.metric_min[k], self.metric_max[k]
                )
            } else {
                ",,".to_string()
            };
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                evals, self.cost_mean[k], self.cost_min[k], self.cost_max[k], metric
            ));
        }
        out
    }

    /// First grid point where the mean metric reaches `threshold`.
    pub fn first_evals_mean_metric(&self, threshold: f64) -> Option<u64> {
        self.metric_mean
            .iter()
            .position(|&m| m >= threshold)
            .map(|k| self.grid[k])
    }
}

/// Batch result: per-trial traces (divergences recorded, not fatal) plus the
/// interpolated summary.
#[derive(Debug, Clone)]
pub struct TrialsResult {
    pub traces: Vec<Trace>,
    pub summary: Summary,
}

/// Runs `n_trials` independent trials. `make(trial)` supplies the objective
/// and θ₀; the optimizer stream is reseeded per trial from `cfg.seed`.
/// Trials run in parallel; results are deterministic given (config, seeds)
/// regardless of worker count.
pub fn run_trials<O, F, R>(
    make: F,
    n_trials: usize,
    cfg: &OptimizerConfig,
    reporter: &R,
) -> Result<TrialsResult>
where
    O: Objective + Send,
    F: Fn(usize) -> Result<(O, Vec<f64>)> + Sync,
    R: Reporter + Sync + ?Sized,
{
    if n_trials == 0 {
        return Err(LibError::InvalidInput("need at least one trial".into()));
    }
    let outcomes: Vec<Result<Trace>> = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let (mut obj, theta0) = make(trial)?;
            let mut trial_cfg = cfg.clone();
            trial_cfg.seed = derive_seed(cfg.seed, trial as u64);
            match run(&mut obj, &theta0, &trial_cfg, reporter) {
                Ok(trace) => Ok(trace),
                Err(RunError::Diverged { trace, .. }) => Ok(*trace),
                Err(RunError::Estimator(e)) => Err(e),
            }
        })
        .collect();
    let traces: Vec<Trace> = outcomes.into_iter().collect::<Result<_>>()?;
    let summary = summarize(&traces)?;
    Ok(TrialsResult { traces, summary })
}

/// Interpolates traces onto the union eval grid (linear between records,
/// hold-last beyond a trace's end).
pub fn summarize(traces: &[Trace]) -> Result<Summary> {
    if traces.is_empty() {
        return Err(LibError::InvalidInput("no traces to summarize".into()));
    }
    let metric_name = traces[0].metric_name.clone();
    let has_metric = traces
        .iter()
        .all(|t| t.rows.iter().all(|r| r.metric.is_some()));
    let mut grid: Vec<u64> = traces
        .iter()
        .flat_map(|t| t.rows.iter().map(|r| r.partial_evals))
        .collect();
    grid.sort_unstable();
    grid.dedup();

    let interp = |t: &Trace, field: &dyn Fn(&TraceRow) -> f64, at: u64| -> f64 {
        let rows = &t.rows;
        match rows.binary_search_by(|r| r.partial_evals.cmp(&at)) {
            Ok(k) => field(&rows[k]),
            Err(0) => field(&rows[0]),
            Err(k) if k == rows.len() => field(rows.last().unwrap()),
            Err(k) => {
                let (lo, hi) = (&rows[k - 1], &rows[k]);
                let span = (hi.partial_evals - lo.partial_evals) as f64;
                let w = (at - lo.partial_evals) as f64 / span;
                field(lo) * (1.0 - w) + field(hi) * w
            }
        }
    };

    let mut summary = Summary {
        metric_name,
        grid: grid.clone(),
        cost_mean: Vec::new(),
        cost_min: Vec::new(),
        cost_max: Vec::new(),
        metric_mean: Vec::new(),
        metric_min: Vec::new(),
        metric_max: Vec::new(),
        has_metric,
    };
    for &at in &grid {
        let costs: Vec<f64> = traces
            .iter()
            .map(|t| interp(t, &|r| r.cost_exact, at))
            .collect();
        summary.cost_mean.push(stats_mean(&costs));
        summary
            .cost_min
            .push(costs.iter().cloned().fold(f64::INFINITY, f64::min));
        summary
            .cost_max
            .push(costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        if has_metric {
            let metrics: Vec<f64> = traces
                .iter()
                .map(|t| interp(t, &|r| r.metric.unwrap_or(f64::NAN), at))
                .collect();
            summary.metric_mean.push(stats_mean(&metrics));
            summary
                .metric_min
                .push(metrics.iter().cloned().fold(f64::INFINITY, f64::min));
            summary
                .metric_max
                .push(metrics.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        }
    }
    Ok(summary)
}

fn stats_mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::synthetic::QuadraticObjective;
    use crate::estimator::EvalCounts;

    fn exact_quadratic(d: usize) -> QuadraticObjective {
        QuadraticObjective::isotropic(d, 0.0, 0.0, 0)
    }

    #[test]
    fn gd_exact_quadratic_contracts_geometrically() {
        let mut obj = exact_quadratic(3);
        let theta0 = vec![1.0, -2.0, 0.5];
        let mut cfg = OptimizerConfig::new(Method::Gd, 0.1, 60, 11);
        cfg.record_every = 1;
        let trace = run_gd(&mut obj, &theta0, &cfg, &NoMetric).unwrap();
        // θ_n = 0.9ⁿ θ₀ for f = ‖θ‖²/2.
        let n = trace.rows.last().unwrap().n;
        let expect: Vec<f64> = theta0.iter().map(|t| t * 0.9f64.powi(n as i32)).collect();
        for (a, b) in trace.final_theta.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(trace.final_partial_evals, 60);
        assert_eq!(obj.counts().partial_evals, 60);
    }

    #[test]
    fn gd_zero_rate_freezes() {
        let mut obj = QuadraticObjective::isotropic(2, 0.0, 0.3, 5);
        let theta0 = vec![0.7, -0.4];
        let cfg = OptimizerConfig::new(Method::Gd, 0.0, 20, 3);
        let trace = run_gd(&mut obj, &theta0, &cfg, &NoMetric).unwrap();
        assert_eq!(trace.final_theta, theta0);
        let first = trace.rows.first().unwrap().cost_exact;
        for r in &trace.rows {
            assert_eq!(r.cost_exact, first);
        }
    }

    #[test]
    fn rcd_single_coordinate_equals_gd() {
        // d = 1: the trajectory law coincides; exact model makes it literal.
        let theta0 = vec![2.0];
        let mut cfg = OptimizerConfig::new(Method::Rcd, 0.2, 30, 9);
        cfg.record_every = 1;
        let rcd = run_rcd(&mut exact_quadratic(1), &theta0, &cfg, &NoMetric).unwrap();
        let mut cfg_gd = cfg.clone();
        cfg_gd.method = Method::Gd;
        let gd = run_gd(&mut exact_quadratic(1), &theta0, &cfg_gd, &NoMetric).unwrap();
        assert_eq!(rcd.final_theta, gd.final_theta);
    }

    #[test]
    fn rcd_expectation_identity() {
        // Averaging the d one-step branches at fixed θ gives
        // θ − (a/d)∇f(θ) exactly.
        let obj = QuadraticObjective::new(vec![1.0, 3.0, 0.5, 2.0], 0.0, 0.0, 0).unwrap();
        let theta = vec![0.4, -1.2, 2.0, 0.7];
        let a = 0.17;
        let d = obj.dim();
        let mut avg = vec![0.0; d];
        for i in 0..d {
            let mut branch = theta.clone();
            branch[i] -= a * obj.exact_partial(&theta, i).unwrap();
            for (acc, v) in avg.iter_mut().zip(branch) {
                *acc += v / d as f64;
            }
        }
        let grad = obj.exact_gradient(&theta).unwrap();
        for k in 0..d {
            let expect = theta[k] - a / d as f64 * grad[k];
            assert!((avg[k] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn rcd_index_frequencies_are_uniform() {
        let d = 10;
        let mut obj = QuadraticObjective::isotropic(d, 0.0, 0.0, 0);
        let mut cfg = OptimizerConfig::new(Method::Rcd, 1e-6, 10_000, 42);
        cfg.record_every = 1;
        let trace = run_rcd(&mut obj, &vec![1.0; d], &cfg, &NoMetric).unwrap();
        let mut counts = vec![0usize; d];
        for r in trace.rows.iter().skip(1) {
            counts[r.i_n.unwrap()] += 1;
        }
        let total: usize = counts.iter().sum();
        assert_eq!(total, 10_000);
        let expected = total as f64 / d as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // χ²(9 dof) at the 1% level.
        assert!(chi2 < 21.666, "chi2 {chi2}");
    }

    #[test]
    fn descent_in_expectation_small_step() {
        // Noiseless GD descends deterministically for a < 1/L; the RCD
        // branch average descends as well.
        let obj = QuadraticObjective::new(vec![1.0, 2.0, 4.0], 0.0, 0.0, 0).unwrap();
        let a = 0.2; // < 1/L = 0.25
        let theta = vec![1.0, -0.5, 0.25];
        let f0 = obj.exact_cost(&theta).unwrap();
        let g = obj.exact_gradient(&theta).unwrap();
        let next: Vec<f64> = theta.iter().zip(&g).map(|(t, gi)| t - a * gi).collect();
        assert!(obj.exact_cost(&next).unwrap() <= f0);

        let d = obj.dim();
        let mut expected_f = 0.0;
        for i in 0..d {
            let mut branch = theta.clone();
            branch[i] -= a * obj.exact_partial(&theta, i).unwrap();
            expected_f += obj.exact_cost(&branch).unwrap() / d as f64;
        }
        assert!(expected_f <= f0);
    }

    #[test]
    fn supermartingale_decay_in_lemma_region() {
        // On a planted quadratic with Gaussian partial noise and a below the
        // stability bound, the one-step conditional expectation of f decays
        // by at least (1 − μa/2) while f stays above the noise floor.
        let lambda = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let (mu, l): (f64, f64) = (1.0, 5.0);
        let sigma = 0.1;
        let d = lambda.len() as f64;
        let delta_f = 2.0;
        let a = (1.0 / l).min(2.0 * mu * delta_f / (l * sigma * sigma * d)) * 0.5;
        let floor = l * a * sigma * sigma * d / mu;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let resamples = 10_000;
        let mut checked = 0;
        for probe in 0..50 {
            if checked >= 5 {
                break;
            }
            let theta: Vec<f64> = (0..5)
                .map(|_| rng.random_range(-0.8..0.8))
                .collect();
            let probe_obj = QuadraticObjective::new(lambda.clone(), 0.0, sigma, probe).unwrap();
            let f0 = probe_obj.exact_cost(&theta).unwrap();
            if f0 <= floor || f0 >= delta_f {
                continue;
            }
            checked += 1;
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            let mut obj =
                QuadraticObjective::new(lambda.clone(), 0.0, sigma, 1000 + probe).unwrap();
            for _ in 0..resamples {
                let g = full_gradient(&mut obj, &theta).unwrap();
                let next: Vec<f64> = theta
                    .iter()
                    .zip(&g.values)
                    .map(|(t, gi)| t - a * gi)
                    .collect();
                let f = obj.exact_cost(&next).unwrap();
                sum += f;
                sumsq += f * f;
            }
            let mean = sum / resamples as f64;
            let var = sumsq / resamples as f64 - mean * mean;
            let se = (var / resamples as f64).sqrt();
            assert!(
                mean <= (1.0 - mu * a / 2.0) * f0 + 3.0 * se,
                "E[f'] = {mean} vs bound {}",
                (1.0 - mu * a / 2.0) * f0 + 3.0 * se
            );
        }
        assert_eq!(checked, 5);
    }

    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spsa_exact_quadratic_converges() {
        let mut obj = exact_quadratic(4);
        let cfg = OptimizerConfig {
            method: Method::Spsa(SpsaSchedule {
                a: 0.4,
                big_a: 10.0,
                alpha: 0.602,
                c: 0.05,
                gamma: 0.101,
            }),
            learning_rate: 0.0,
            max_partial_evals: 4000,
            target: None,
            seed: 5,
            record_every: 100,
            diagnostics_h: None,
        };
        let trace = run_spsa(&mut obj, &[1.0, -1.0, 0.5, 0.8], &cfg, &NoMetric).unwrap();
        assert!(
            trace.rows.last().unwrap().cost_exact < 1e-3,
            "final cost {}",
            trace.rows.last().unwrap().cost_exact
        );
        // Two cost evaluations per equivalent partial.
        assert_eq!(obj.counts().cost_evals, 2 * trace.final_partial_evals);
    }

    #[test]
    fn spsa_degenerate_schedule_is_constant() {
        let s = SpsaSchedule {
            a: 0.3,
            big_a: 0.0,
            alpha: 0.0,
            c: 0.1,
            gamma: 0.0,
        };
        for k in [0u64, 1, 10, 1000] {
            assert_eq!(s.rate_at(k), 0.3);
            assert_eq!(s.perturbation_at(k), 0.1);
        }
    }

    #[test]
    fn budget_accounting_per_method() {
        let d = 4;
        let budget = 37;
        for (method, per_iter) in [
            (Method::Gd, d as u64),
            (Method::Rcd, 1),
            (Method::Spsa(SpsaSchedule::standard(0.1, 0.1)), 1),
        ] {
            let mut obj = exact_quadratic(d);
            let cfg = OptimizerConfig {
                method,
                learning_rate: 0.05,
                max_partial_evals: budget,
                target: None,
                seed: 1,
                record_every: 5,
                diagnostics_h: None,
            };
            let trace = run(&mut obj, &vec![0.5; d], &cfg, &NoMetric).unwrap();
            assert!(trace.final_partial_evals <= budget);
            assert_eq!(trace.final_partial_evals % per_iter, 0);
            // Strictly increasing eval column.
            for w in trace.rows.windows(2) {
                assert!(w[1].partial_evals > w[0].partial_evals);
            }
        }
    }

    #[test]
    fn divergence_preserves_trace() {
        // a·λ ≫ 2 explodes; the error carries the rows recorded so far.
        let mut obj = QuadraticObjective::new(vec![30.0], 0.0, 0.0, 0).unwrap();
        let mut cfg = OptimizerConfig::new(Method::Gd, 1.0, 100, 0);
        cfg.record_every = 1;
        match run_gd(&mut obj, &[1.0], &cfg, &NoMetric) {
            Err(RunError::Diverged { trace, .. }) => {
                assert!(trace.diverged.is_some());
                assert!(!trace.rows.is_empty());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn target_stops_early() {
        let mut obj = exact_quadratic(2);
        let mut cfg = OptimizerConfig::new(Method::Gd, 0.3, 10_000, 0);
        cfg.target = Some(Target::CostAtMost(1e-6));
        cfg.record_every = 1;
        let trace = run_gd(&mut obj, &[1.0, 1.0], &cfg, &NoMetric).unwrap();
        assert!(trace.target_reached);
        assert!(trace.final_partial_evals < 10_000);
        assert!(trace.rows.last().unwrap().cost_exact <= 1e-6);
    }

    #[test]
    fn trials_single_equals_summary() {
        let cfg = OptimizerConfig::new(Method::Rcd, 0.1, 50, 123);
        let result = run_trials(
            |_| Ok((exact_quadratic(3), vec![1.0, 0.5, -0.5])),
            1,
            &cfg,
            &NoMetric,
        )
        .unwrap();
        assert_eq!(result.traces.len(), 1);
        let t = &result.traces[0];
        for (k, row) in t.rows.iter().enumerate() {
            assert_eq!(result.summary.grid[k], row.partial_evals);
            assert_eq!(result.summary.cost_mean[k], row.cost_exact);
            assert_eq!(result.summary.cost_min[k], row.cost_exact);
        }
    }

    #[test]
    fn identical_seeds_reproduce_traces() {
        let cfg = OptimizerConfig::new(Method::Rcd, 0.1, 60, 7);
        let make = |_t: usize| {
            Ok((
                QuadraticObjective::new(vec![1.0, 2.0], 0.0, 0.2, 99).unwrap(),
                vec![1.0, -1.0],
            ))
        };
        let a = run_trials(make, 3, &cfg, &NoMetric).unwrap();
        let b = run_trials(make, 3, &cfg, &NoMetric).unwrap();
        for (x, y) in a.traces.iter().zip(&b.traces) {
            assert_eq!(x.to_csv(), y.to_csv());
        }
        assert_eq!(a.summary.to_csv(), b.summary.to_csv());
    }

    #[test]
    fn trial_divergence_is_recorded_not_fatal() {
        let cfg = OptimizerConfig::new(Method::Gd, 1.0, 100, 0);
        let result = run_trials(
            |t| {
                let lambda = if t == 0 { vec![30.0] } else { vec![1.0] };
                Ok((
                    QuadraticObjective::new(lambda, 0.0, 0.0, t as u64).unwrap(),
                    vec![1.0],
                ))
            },
            2,
            &cfg,
            &NoMetric,
        )
        .unwrap();
        assert!(result.traces[0].diverged.is_some());
        assert!(result.traces[1].diverged.is_none());
    }

    #[test]
    fn counters_match_table_accounting() {
        // GD charges iterations×d, RCD iterations×1.
        let d = 5;
        let mut obj = exact_quadratic(d);
        let cfg = OptimizerConfig::new(Method::Gd, 0.1, 20 * d as u64, 0);
        let trace = run_gd(&mut obj, &vec![1.0; d], &cfg, &NoMetric).unwrap();
        let iters = trace.rows.last().unwrap().n;
        assert_eq!(obj.counts().partial_evals, iters * d as u64);

        let mut obj = exact_quadratic(d);
        let cfg = OptimizerConfig::new(Method::Rcd, 0.1, 20, 0);
        let trace = run_rcd(&mut obj, &vec![1.0; d], &cfg, &NoMetric).unwrap();
        let iters = trace.rows.last().unwrap().n;
        assert_eq!(obj.counts().partial_evals, iters);
        assert_eq!(obj.counts(), EvalCounts { cost_evals: 0, partial_evals: iters });
    }

    #[test]
    fn csv_schema_is_fixed() {
        let mut obj = exact_quadratic(2);
        let mut cfg = OptimizerConfig::new(Method::Rcd, 0.1, 10, 3);
        cfg.record_every = 2;
        let trace = run_rcd(&mut obj, &[1.0, 1.0], &cfg, &NoMetric).unwrap();
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,partial_evals,cost_noisy,cost_exact,metric,i_n,L,L_avg,L_max"
        );
        // GD/SPSA rows carry −1; RCD rows after step 0 carry the index.
        let row0 = lines.next().unwrap();
        assert!(row0.starts_with("0,0,"));
        assert!(row0.contains(",-1,"));
    }
}

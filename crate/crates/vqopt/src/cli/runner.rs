//! Command implementations: experiment batches, QUBO compilation, noise
//! histograms, and trajectory diagnostics.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cli::config::{ExperimentConfig, ExperimentKind, InitMode};
use crate::cli::experiments::{build_circuit_experiment, build_reporter};
use crate::cli::plot::{self, Series};
use crate::diagnostics::{lipschitz_at_fn, stability_experiment, StabilityParams};
use crate::error::{Error, Result};
use crate::estimator::synthetic::QuadraticObjective;
use crate::estimator::{CostFunction, NoiseModel};
use crate::optim::{
    derive_seed, run_trials, Method, OptimizerConfig, SpsaSchedule, Summary, Target, Trace,
};
use crate::qubo::file::{ising_listing, parse_problem};
use crate::stats;

/// Environment variable naming the default output root.
pub const OUT_ROOT_ENV: &str = "VQOPT_OUT_ROOT";

/// Outcome of `cmd_run`, mapped onto process exit codes by the binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// Exit 0.
    Success,
    /// Artifacts were written but at least one trial diverged; exit 3.
    TrialDiverged,
}

/// Uniform θ₀ in [−π, π]^d.
fn uniform_theta(d: usize, seed: u64) -> Vec<f64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..d)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect()
}

/// Reads a θ checkpoint file: one value per line, `#` comments.
pub fn read_theta_file(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        out.push(content.parse().map_err(|e| Error::Parse {
            line: idx + 1,
            msg: format!("bad parameter value: {e}"),
        })?);
    }
    if out.is_empty() {
        return Err(Error::Config(format!(
            "checkpoint {} holds no parameters",
            path.display()
        )));
    }
    Ok(out)
}

/// Writes a θ checkpoint file.
pub fn write_theta_file(path: &Path, theta: &[f64]) -> Result<()> {
    let mut text = String::new();
    for t in theta {
        text.push_str(&format!("{t}\n"));
    }
    fs::write(path, text)?;
    Ok(())
}

fn resolve_out_dir(cfg: &ExperimentConfig, out_root: Option<&Path>) -> PathBuf {
    let root = out_root
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    if cfg.output.dir.is_absolute() {
        cfg.output.dir.clone()
    } else {
        root.join(&cfg.output.dir)
    }
}

struct MethodRun {
    label: String,
    cfg: OptimizerConfig,
}

fn method_runs(cfg: &ExperimentConfig) -> Result<Vec<MethodRun>> {
    let opt = cfg
        .optimizer
        .as_ref()
        .ok_or_else(|| Error::Config("missing [optimizer] section".into()))?;
    let target = match (opt.target_metric, opt.target_cost) {
        (Some(phi), _) => Some(Target::MetricAtLeast(phi)),
        (None, Some(eps)) => Some(Target::CostAtMost(eps)),
        (None, None) => None,
    };
    let base = |method: Method, a: f64| OptimizerConfig {
        method,
        learning_rate: a,
        max_partial_evals: opt.budget,
        target: target.clone(),
        seed: opt.seed,
        record_every: opt.record_every,
        diagnostics_h: cfg.output.diagnostics.then_some(cfg.output.diagnostics_h),
    };
    let mut runs = Vec::new();
    if let Some(gd) = &opt.gd {
        runs.push(MethodRun {
            label: "gd".into(),
            cfg: base(Method::Gd, gd.a),
        });
    }
    if let Some(rcd) = &opt.rcd {
        runs.push(MethodRun {
            label: "rcd".into(),
            cfg: base(Method::Rcd, rcd.a),
        });
    }
    for (k, s) in opt.spsa.iter().enumerate() {
        let label = s
            .label
            .clone()
            .unwrap_or_else(|| format!("spsa_{}", k + 1));
        runs.push(MethodRun {
            label,
            cfg: base(
                Method::Spsa(SpsaSchedule {
                    a: s.a,
                    big_a: s.big_a,
                    alpha: s.alpha,
                    c: s.c,
                    gamma: s.gamma,
                }),
                0.0,
            ),
        });
    }
    Ok(runs)
}

fn theta0_provider(
    cfg: &ExperimentConfig,
    config_dir: &Path,
    d: usize,
) -> Result<Box<dyn Fn(usize) -> Vec<f64> + Sync + Send>> {
    let opt = cfg
        .optimizer
        .as_ref()
        .ok_or_else(|| Error::Config("missing [optimizer] section".into()))?;
    match opt.init {
        InitMode::Fixed => {
            let theta = uniform_theta(d, derive_seed(opt.seed, 0xF1AED));
            Ok(Box::new(move |_| theta.clone()))
        }
        InitMode::Random => {
            let seed = opt.seed;
            Ok(Box::new(move |trial| {
                uniform_theta(d, derive_seed(seed, 0xF1AED + 1 + trial as u64))
            }))
        }
        InitMode::File => {
            let rel = opt
                .init_file
                .as_ref()
                .ok_or_else(|| Error::Config("init = \"file\" needs init_file".into()))?;
            let path = if rel.is_absolute() {
                rel.clone()
            } else {
                config_dir.join(rel)
            };
            let theta = read_theta_file(&path)?;
            if theta.len() != d {
                return Err(Error::Config(format!(
                    "init file {} has {} parameters, ansatz needs {d}",
                    path.display(),
                    theta.len()
                )));
            }
            Ok(Box::new(move |_| theta.clone()))
        }
    }
}

fn checkpoints_csv(trace: &Trace) -> String {
    let d = trace.final_theta.len();
    let mut out = String::from("n");
    for k in 0..d {
        out.push_str(&format!(",theta_{k}"));
    }
    out.push('\n');
    for (n, theta) in &trace.checkpoints {
        out.push_str(&n.to_string());
        for t in theta {
            out.push_str(&format!(",{t}"));
        }
        out.push('\n');
    }
    out
}

fn metric_series(label: &str, color: &str, summary: &Summary) -> Series {
    Series {
        label: label.to_string(),
        color: color.to_string(),
        xs: summary.grid.iter().map(|&e| e as f64).collect(),
        mean: summary.metric_mean.clone(),
        lo: summary.metric_min.clone(),
        hi: summary.metric_max.clone(),
    }
}

/// Runs the experiment described by `config_path`. Writes per-trial trace
/// and checkpoint CSVs, per-method summary CSVs, one SVG per metric, and a
/// verbatim copy of the config into the output directory.
pub fn cmd_run(config_path: &Path, out_root: Option<&Path>) -> Result<RunStatus> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg = ExperimentConfig::parse(&text)?;
    let out_dir = resolve_out_dir(&cfg, out_root);
    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join("config.toml"), &text)?;

    let status = if cfg.output.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.output.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
        pool.install(|| run_experiment(&cfg, config_path, &out_dir))?
    } else {
        run_experiment(&cfg, config_path, &out_dir)?
    };
    Ok(status)
}

fn run_experiment(
    cfg: &ExperimentConfig,
    config_path: &Path,
    out_dir: &Path,
) -> Result<RunStatus> {
    match cfg.experiment.kind {
        ExperimentKind::Stability => run_stability(cfg, out_dir),
        ExperimentKind::NoiseHist => {
            run_noise_hist(cfg, config_path, out_dir)?;
            Ok(RunStatus::Success)
        }
        _ => run_circuit_batches(cfg, config_path, out_dir),
    }
}

fn run_circuit_batches(
    cfg: &ExperimentConfig,
    config_path: &Path,
    out_dir: &Path,
) -> Result<RunStatus> {
    let exp = build_circuit_experiment(cfg)?;
    let reporter = build_reporter(cfg, &exp)?;
    let noise = cfg.noise_model()?;
    let opt = cfg.optimizer.as_ref().expect("validated");
    let config_dir = config_path.parent().unwrap_or(Path::new("."));
    let theta0 = theta0_provider(cfg, config_dir, exp.d())?;
    let runs = method_runs(cfg)?;

    let mut any_diverged = false;
    let mut series = Vec::new();
    for (k, run) in runs.iter().enumerate() {
        let result = run_trials(
            |trial| {
                let obj = CostFunction::new(
                    exp.runner.clone(),
                    exp.kernel.clone(),
                    noise.clone(),
                    derive_seed(opt.seed, 0xC0DE + trial as u64),
                )?
                .with_cost_affine(exp.cost_offset, exp.cost_scale)?;
                Ok((obj, theta0(trial)))
            },
            opt.trials,
            &run.cfg,
            reporter.as_ref(),
        )?;
        for (t, trace) in result.traces.iter().enumerate() {
            fs::write(
                out_dir.join(format!("{}_trial_{t:02}.csv", run.label)),
                trace.to_csv(),
            )?;
            fs::write(
                out_dir.join(format!("{}_trial_{t:02}_checkpoints.csv", run.label)),
                checkpoints_csv(trace),
            )?;
            if trace.diverged.is_some() {
                any_diverged = true;
            }
        }
        fs::write(
            out_dir.join(format!("{}_summary.csv", run.label)),
            result.summary.to_csv(),
        )?;
        if result.summary.has_metric {
            series.push(metric_series(&run.label, plot::palette(k), &result.summary));
        }
    }
    if !series.is_empty() {
        let metric_name = reporter.metric_name().to_string();
        let svg = plot::line_plot(
            &format!("{} — {}", cfg.experiment.kind.name(), metric_name),
            "partial derivative evaluations",
            &metric_name,
            &series,
        );
        fs::write(out_dir.join(format!("{metric_name}.svg")), svg)?;
    }
    Ok(if any_diverged {
        RunStatus::TrialDiverged
    } else {
        RunStatus::Success
    })
}

fn run_stability(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunStatus> {
    let st = cfg.stability.as_ref().expect("validated");
    let d = st.lambda.len();
    let mu = st.lambda.iter().cloned().fold(f64::MAX, f64::min);
    let lipschitz = st.lambda.iter().cloned().fold(f64::MIN, f64::max);
    // Lemma bound for noisy GD: a < min{1/L, 2μδ_f/(Lσ²d)}.
    let bound = (1.0 / lipschitz)
        .min(2.0 * mu * st.delta_f / (lipschitz * st.sigma * st.sigma * d as f64));
    let a_grid: Vec<f64> = st.a_grid_factors.iter().map(|f| f * bound).collect();
    // θ₀ along the uniform direction with f(θ₀) = f0_fraction·δ_f.
    let scale = (2.0 * st.f0_fraction * st.delta_f / st.lambda.iter().sum::<f64>()).sqrt();
    let theta0 = vec![scale; d];
    let params = StabilityParams {
        a_grid,
        trials_per_a: st.trials,
        delta_f: st.delta_f,
        mu,
        lipschitz,
        sigma: st.sigma,
        max_iters: st.max_iters,
        seed: st.seed,
    };
    let lambda = st.lambda.clone();
    let sigma = st.sigma;
    let report = stability_experiment(
        |seed| QuadraticObjective::new(lambda.clone(), 0.0, sigma, seed).unwrap(),
        &theta0,
        &params,
    )?;

    let mut csv = String::from("a,escape_frequency,trials,floor\n");
    for row in &report.rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.learning_rate, row.escape_frequency, row.trials, row.floor
        ));
    }
    fs::write(out_dir.join("stability.csv"), csv)?;
    fs::write(
        out_dir.join("stability_meta.csv"),
        format!(
            "spearman,f_initial,delta_f,rate_bound\n{},{},{},{}\n",
            report.spearman, report.f_initial, st.delta_f, bound
        ),
    )?;
    let xs: Vec<f64> = report.rows.iter().map(|r| r.learning_rate).collect();
    let ys: Vec<f64> = report.rows.iter().map(|r| r.escape_frequency).collect();
    let svg = plot::line_plot(
        "stability — escape frequency",
        "learning rate",
        "escape frequency",
        &[Series {
            label: "noisy gd".into(),
            color: plot::palette(0).into(),
            xs,
            mean: ys.clone(),
            lo: ys.clone(),
            hi: ys,
        }],
    );
    fs::write(out_dir.join("escape_frequency.svg"), svg)?;
    Ok(RunStatus::Success)
}

/// Per-direction noise-histogram data at a stored checkpoint.
pub struct NoiseHistOutput {
    pub samples: Vec<Vec<f64>>,
    pub summary: Vec<DirectionStats>,
}

pub struct DirectionStats {
    pub direction: usize,
    pub exact: f64,
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Computes per-direction partial-derivative estimate samples at a fixed θ.
pub fn noise_hist_samples(
    cost: &CostFunction,
    theta: &[f64],
    directions: usize,
    estimates: usize,
    seed: u64,
) -> Result<NoiseHistOutput> {
    let samples: Vec<Vec<f64>> = (0..directions)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x415 + i as u64));
            match cost.noise() {
                NoiseModel::Exact => {
                    let v = cost.partial_exact(theta, i)?;
                    Ok(vec![v; estimates])
                }
                NoiseModel::Gaussian { sigma_partial, .. } => {
                    use rand::Rng;
                    let exact = cost.partial_exact(theta, i)?;
                    Ok((0..estimates)
                        .map(|_| {
                            exact
                                + sigma_partial
                                    * rng.sample::<f64, _>(rand_distr::StandardNormal)
                        })
                        .collect())
                }
                NoiseModel::Shots { .. } => {
                    let frozen = cost.freeze_shots_partial(theta, i)?;
                    (0..estimates).map(|_| frozen.sample(&mut rng)).collect()
                }
            }
        })
        .collect::<Result<_>>()?;
    let summary = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(DirectionStats {
                direction: i,
                exact: cost.partial_exact(theta, i)?,
                mean: stats::mean(s),
                std: stats::std_dev(s),
                skewness: stats::skewness(s),
                excess_kurtosis: stats::excess_kurtosis(s),
            })
        })
        .collect::<Result<_>>()?;
    Ok(NoiseHistOutput { samples, summary })
}

fn run_noise_hist(cfg: &ExperimentConfig, config_path: &Path, out_dir: &Path) -> Result<()> {
    let section = cfg.noise_hist.as_ref().expect("validated");
    let exp = build_circuit_experiment(cfg)?;
    let noise = cfg.noise_model()?;
    let cost = CostFunction::new(exp.runner.clone(), exp.kernel.clone(), noise, 0)?
        .with_cost_affine(exp.cost_offset, exp.cost_scale)?;
    let config_dir = config_path.parent().unwrap_or(Path::new("."));
    let checkpoint = if section.checkpoint.is_absolute() {
        section.checkpoint.clone()
    } else {
        config_dir.join(&section.checkpoint)
    };
    let theta = read_theta_file(&checkpoint)?;
    if theta.len() != exp.d() {
        return Err(Error::Config(format!(
            "checkpoint has {} parameters, ansatz needs {}",
            theta.len(),
            exp.d()
        )));
    }
    let directions = section.directions.unwrap_or(exp.d()).min(exp.d());
    let out = noise_hist_samples(&cost, &theta, directions, section.estimates, section.seed)?;

    let mut csv = String::new();
    csv.push_str(
        &(0..directions)
            .map(|i| format!("d{i}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    csv.push('\n');
    for row in 0..section.estimates {
        let line: Vec<String> = (0..directions)
            .map(|i| out.samples[i][row].to_string())
            .collect();
        csv.push_str(&line.join(","));
        csv.push('\n');
    }
    fs::write(out_dir.join("samples.csv"), csv)?;

    let mut csv = String::from("direction,exact,mean,std,skewness,excess_kurtosis\n");
    for s in &out.summary {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.direction, s.exact, s.mean, s.std, s.skewness, s.excess_kurtosis
        ));
    }
    fs::write(out_dir.join("noise_hist_summary.csv"), csv)?;
    Ok(())
}

/// Compiles a QUBO problem file to its Ising listing.
pub fn cmd_qubo_compile(problem_path: &Path) -> Result<String> {
    let text = fs::read_to_string(problem_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", problem_path.display())))?;
    let q = parse_problem(&text)?;
    Ok(ising_listing(&q))
}

/// Recomputes Lipschitz diagnostics for every θ checkpoint found in a trace
/// directory, writing `diagnostics.csv`.
pub fn cmd_diagnose(trace_dir: &Path) -> Result<PathBuf> {
    let cfg = ExperimentConfig::load(&trace_dir.join("config.toml"))?;
    let h = cfg.output.diagnostics_h;
    let exact: Box<dyn Fn(&[f64]) -> Result<f64> + Sync> = match cfg.experiment.kind {
        ExperimentKind::Stability => {
            let lambda = cfg
                .stability
                .as_ref()
                .expect("validated")
                .lambda
                .clone();
            Box::new(move |theta: &[f64]| {
                Ok(0.5
                    * theta
                        .iter()
                        .zip(&lambda)
                        .map(|(t, l)| l * t * t)
                        .sum::<f64>())
            })
        }
        _ => {
            let exp = build_circuit_experiment(&cfg)?;
            let cost = CostFunction::new(exp.runner.clone(), exp.kernel.clone(), NoiseModel::Exact, 0)?
                .with_cost_affine(exp.cost_offset, exp.cost_scale)?;
            Box::new(move |theta: &[f64]| cost.cost_exact(theta))
        }
    };

    let mut checkpoint_files: Vec<PathBuf> = fs::read_dir(trace_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|f| f.to_str())
                .is_some_and(|f| f.ends_with("_checkpoints.csv"))
        })
        .collect();
    checkpoint_files.sort();
    if checkpoint_files.is_empty() {
        return Err(Error::Config(format!(
            "no θ checkpoints found in {}",
            trace_dir.display()
        )));
    }

    let mut rows: Vec<(String, u64, Vec<f64>)> = Vec::new();
    for file in &checkpoint_files {
        let label = file
            .file_name()
            .and_then(|f| f.to_str())
            .unwrap_or("trace")
            .trim_end_matches("_checkpoints.csv")
            .to_string();
        let text = fs::read_to_string(file)?;
        for (idx, line) in text.lines().enumerate().skip(1) {
            let mut fields = line.split(',');
            let n: u64 = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or(Error::Parse {
                    line: idx + 1,
                    msg: format!("bad checkpoint row in {}", file.display()),
                })?;
            let theta: Vec<f64> = fields
                .map(|f| {
                    f.parse().map_err(|e| Error::Parse {
                        line: idx + 1,
                        msg: format!("bad θ value: {e}"),
                    })
                })
                .collect::<Result<_>>()?;
            rows.push((label.clone(), n, theta));
        }
    }

    let reports: Vec<(String, u64, crate::diagnostics::LipschitzReport)> = rows
        .into_par_iter()
        .map(|(label, n, theta)| {
            let report = lipschitz_at_fn(|t| exact(t), &theta, h)?;
            Ok((label, n, report))
        })
        .collect::<Result<_>>()?;

    let mut csv = String::from("checkpoint,n,L,L_avg,L_max,L_over_avg,L_over_max\n");
    for (label, n, r) in reports {
        csv.push_str(&format!(
            "{label},{n},{},{},{},{},{}\n",
            r.l, r.l_avg, r.l_max, r.ratio_avg, r.ratio_max
        ));
    }
    let out = trace_dir.join("diagnostics.csv");
    fs::write(&out, csv)?;
    Ok(out)
}

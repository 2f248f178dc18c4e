//! Experiment configuration: a typed key–value file with section headers
//! (TOML). Unknown keys are rejected and per-experiment required fields are
//! validated before any simulation starts.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    TfimVqe,
    HeaVqe,
    IsingQaoa,
    HeisenbergQaoa,
    Maxcut,
    Tsp,
    Factoring,
    NoiseHist,
    Stability,
    SpsaCompare,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TfimVqe => "tfim-vqe",
            ExperimentKind::HeaVqe => "hea-vqe",
            ExperimentKind::IsingQaoa => "ising-qaoa",
            ExperimentKind::HeisenbergQaoa => "heisenberg-qaoa",
            ExperimentKind::Maxcut => "maxcut",
            ExperimentKind::Tsp => "tsp",
            ExperimentKind::Factoring => "factoring",
            ExperimentKind::NoiseHist => "noise-hist",
            ExperimentKind::Stability => "stability",
            ExperimentKind::SpsaCompare => "spsa-compare",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    /// Qubit count (system size).
    pub n: Option<usize>,
    /// Gate-ansatz layer count.
    pub layers: Option<usize>,
    /// Alternating-evolution layer count (d = 2p).
    pub p: Option<usize>,
    /// Drive the optimizer in normalized energy units
    /// `(E − c)/|E_GS − c|` instead of raw energy; learning rates and noise
    /// strengths then live on the metric's scale.
    #[serde(default)]
    pub normalize_cost: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSection {
    pub a: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpsaSection {
    pub label: Option<String>,
    pub a: f64,
    pub c: f64,
    #[serde(default)]
    pub big_a: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

fn default_alpha() -> f64 {
    0.602
}

fn default_gamma() -> f64 {
    0.101
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// One θ₀ drawn from the seed, shared by all trials.
    Fixed,
    /// Independent uniform θ₀ ∈ [−π, π]^d per trial.
    Random,
    /// θ₀ loaded from `init_file`.
    File,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub budget: u64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    #[serde(default = "default_init")]
    pub init: InitMode,
    pub init_file: Option<PathBuf>,
    pub target_metric: Option<f64>,
    pub target_cost: Option<f64>,
    pub gd: Option<RateSection>,
    pub rcd: Option<RateSection>,
    #[serde(default)]
    pub spsa: Vec<SpsaSection>,
}

fn default_record_every() -> u64 {
    1
}

fn default_init() -> InitMode {
    InitMode::Fixed
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Exact,
    Gaussian,
    Shots,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub model: NoiseKind,
    pub shots: Option<u64>,
    pub sigma_cost: Option<f64>,
    pub sigma_partial: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    EnergyRatio,
    /// `(E − c)/(E_GS − c)` with a configured shift.
    ShiftedEnergyRatio,
    Fidelity,
    None,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub metric: Option<MetricKind>,
    /// Absolute shift `c` for the shifted energy ratio.
    pub shift: Option<f64>,
    /// Relative shift: `c = shift_ratio · E_GS`.
    pub shift_ratio: Option<f64>,
    #[serde(default)]
    pub diagnostics: bool,
    #[serde(default = "default_diag_h")]
    pub diagnostics_h: f64,
    /// Rayon worker cap; 0 leaves the global default.
    #[serde(default)]
    pub workers: usize,
}

fn default_diag_h() -> f64 {
    crate::diagnostics::DEFAULT_FD_STEP
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseHistSection {
    /// θ checkpoint file, resolved relative to the config file.
    pub checkpoint: PathBuf,
    pub estimates: usize,
    /// Directions to sample; all of them when absent.
    pub directions: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    /// Planted Hessian eigenvalues of the quadratic.
    pub lambda: Vec<f64>,
    /// Partial-derivative noise σ.
    pub sigma: f64,
    /// Basin threshold δ_f.
    pub delta_f: f64,
    /// Initial loss as a fraction of δ_f.
    pub f0_fraction: f64,
    /// Learning-rate grid as multiples of the stability bound
    /// min{1/L, 2μδ_f/(Lσ²d)}.
    pub a_grid_factors: Vec<f64>,
    pub trials: usize,
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub optimizer: Option<OptimizerSection>,
    pub noise: Option<NoiseSection>,
    pub output: OutputSection,
    pub noise_hist: Option<NoiseHistSection>,
    pub stability: Option<StabilitySection>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    fn require_experiment_field(&self, field: &str, present: bool) -> Result<()> {
        if !present {
            return Err(Error::Config(format!(
                "experiment `{}` requires field `experiment.{field}`",
                self.experiment.kind.name()
            )));
        }
        Ok(())
    }

    fn require_section(&self, name: &str, present: bool) -> Result<()> {
        if !present {
            return Err(Error::Config(format!(
                "experiment `{}` requires the [{name}] section",
                self.experiment.kind.name()
            )));
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        let kind = self.experiment.kind;
        match kind {
            TfimVqe | HeaVqe | SpsaCompare => {
                self.require_experiment_field("n", self.experiment.n.is_some())?;
                self.require_experiment_field("layers", self.experiment.layers.is_some())?;
            }
            IsingQaoa | HeisenbergQaoa | Factoring => {
                if kind != Factoring {
                    self.require_experiment_field("n", self.experiment.n.is_some())?;
                }
                self.require_experiment_field("p", self.experiment.p.is_some())?;
            }
            Maxcut | Tsp => {
                self.require_experiment_field("layers", self.experiment.layers.is_some())?;
            }
            NoiseHist => {
                self.require_experiment_field("n", self.experiment.n.is_some())?;
                self.require_experiment_field("layers", self.experiment.layers.is_some())?;
                self.require_section("noise_hist", self.noise_hist.is_some())?;
                self.require_section("noise", self.noise.is_some())?;
            }
            Stability => {
                self.require_section("stability", self.stability.is_some())?;
            }
        }
        if kind != Stability && kind != NoiseHist {
            self.require_section("optimizer", self.optimizer.is_some())?;
            self.require_section("noise", self.noise.is_some())?;
            let opt = self.optimizer.as_ref().unwrap();
            if opt.budget == 0 {
                return Err(Error::Config("optimizer.budget must be > 0".into()));
            }
            if opt.trials == 0 {
                return Err(Error::Config("optimizer.trials must be ≥ 1".into()));
            }
            if opt.record_every == 0 {
                return Err(Error::Config("optimizer.record_every must be ≥ 1".into()));
            }
            if opt.init == InitMode::File && opt.init_file.is_none() {
                return Err(Error::Config(
                    "optimizer.init = \"file\" requires optimizer.init_file".into(),
                ));
            }
            let has_method = opt.gd.is_some() || opt.rcd.is_some() || !opt.spsa.is_empty();
            if !has_method {
                return Err(Error::Config(
                    "optimizer needs at least one of [optimizer.gd], [optimizer.rcd], [[optimizer.spsa]]"
                        .into(),
                ));
            }
            if kind == SpsaCompare && opt.rcd.is_none() {
                return Err(Error::Config(
                    "spsa-compare requires [optimizer.rcd] as the baseline".into(),
                ));
            }
        }
        if let Some(noise) = &self.noise {
            match noise.model {
                NoiseKind::Shots => {
                    if noise.shots.is_none() {
                        return Err(Error::Config("noise.model = \"shots\" requires noise.shots".into()));
                    }
                }
                NoiseKind::Gaussian => {
                    if noise.sigma_partial.is_none() {
                        return Err(Error::Config(
                            "noise.model = \"gaussian\" requires noise.sigma_partial".into(),
                        ));
                    }
                }
                NoiseKind::Exact => {}
            }
        }
        if let Some(out_metric) = self.output.metric {
            if out_metric == MetricKind::ShiftedEnergyRatio
                && self.output.shift.is_none()
                && self.output.shift_ratio.is_none()
            {
                return Err(Error::Config(
                    "shifted-energy-ratio requires output.shift or output.shift_ratio".into(),
                ));
            }
        }
        if let Some(st) = &self.stability {
            if st.lambda.is_empty() || st.lambda.iter().any(|l| *l <= 0.0) {
                return Err(Error::Config("stability.lambda must be positive".into()));
            }
            if st.a_grid_factors.is_empty() {
                return Err(Error::Config("stability.a_grid_factors is empty".into()));
            }
            if !(0.0..1.0).contains(&st.f0_fraction) {
                return Err(Error::Config("stability.f0_fraction must be in (0,1)".into()));
            }
        }
        Ok(())
    }

    pub fn noise_model(&self) -> Result<crate::estimator::NoiseModel> {
        let Some(noise) = &self.noise else {
            return Ok(crate::estimator::NoiseModel::Exact);
        };
        Ok(match noise.model {
            NoiseKind::Exact => crate::estimator::NoiseModel::Exact,
            NoiseKind::Gaussian => crate::estimator::NoiseModel::Gaussian {
                sigma_cost: noise.sigma_cost.unwrap_or(0.0),
                sigma_partial: noise.sigma_partial.unwrap_or(0.0),
            },
            NoiseKind::Shots => crate::estimator::NoiseModel::Shots {
                shots: noise.shots.unwrap_or(1),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [experiment]
        kind = "maxcut"
        layers = 5

        [optimizer]
        budget = 400
        trials = 2
        seed = 7
        [optimizer.rcd]
        a = 3.0

        [noise]
        model = "gaussian"
        sigma_partial = 0.1

        [output]
        dir = "out/maxcut"
    "#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.experiment.kind, ExperimentKind::Maxcut);
        assert_eq!(cfg.optimizer.unwrap().budget, 400);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replace("budget = 400", "budget = 400\n        bugdet = 4");
        let err = ExperimentConfig::parse(&bad).unwrap_err();
        assert!(err.to_string().contains("bugdet"), "{err}");
    }

    #[test]
    fn missing_required_field_names_it() {
        let bad = MINIMAL.replace("layers = 5", "");
        let err = ExperimentConfig::parse(&bad).unwrap_err();
        assert!(err.to_string().contains("experiment.layers"), "{err}");
    }

    #[test]
    fn shots_model_requires_count() {
        let bad = MINIMAL.replace(
            "model = \"gaussian\"\n        sigma_partial = 0.1",
            "model = \"shots\"",
        );
        let err = ExperimentConfig::parse(&bad).unwrap_err();
        assert!(err.to_string().contains("noise.shots"), "{err}");
    }

    #[test]
    fn method_section_required() {
        let bad = MINIMAL.replace("[optimizer.rcd]\n        a = 3.0", "");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }
}

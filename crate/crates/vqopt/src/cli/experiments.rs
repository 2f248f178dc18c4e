//! Maps experiment configs onto concrete circuit workloads: ansatz, cost
//! kernel, reference energies, and the plotted metric.

use crate::ansatz::{
    build_hea, build_qaoa_like_tfim, build_qubo_ansatz, AlternatingEvolution,
};
use crate::cli::config::{ExperimentConfig, ExperimentKind, MetricKind};
use crate::error::{Error, Result};
use crate::estimator::{CostKernel, StateRunner};
use crate::hamiltonians::{
    build_heisenberg_pair, build_ising_control, build_tfim, FidelityTarget,
};
use crate::optim::{EnergyRatio, FidelityFromCost, NoMetric, Reporter, StateFidelity};
use crate::quantum::pauli::{Observable, PauliLetter, PauliString};
use crate::quantum::spectral::ground_space;
use crate::quantum::state::{init_basis_state, StateVector};
use crate::qubo::{
    brute_force_min, build_factoring_143, build_maxcut, maxcut_paper_graph, qubo_to_ising,
    tsp_paper_instance,
};

/// A fully assembled circuit workload.
pub struct CircuitExperiment {
    pub runner: StateRunner,
    pub kernel: CostKernel,
    /// Reference ground energy for ratio metrics.
    pub ground_energy: Option<f64>,
    /// Ground-space basis for fidelity reporting on energy kernels.
    pub ground_basis: Option<FidelityTarget>,
    pub default_metric: MetricKind,
    /// Default shift for the shifted energy ratio, when the workload needs
    /// one (E_GS at or near zero).
    pub default_shift: Option<f64>,
    /// Affine cost map `(E − offset)/scale` applied when the config asks for
    /// normalized cost units.
    pub cost_offset: f64,
    pub cost_scale: f64,
}

impl CircuitExperiment {
    pub fn d(&self) -> usize {
        self.runner.d()
    }

    pub fn is_normalized(&self) -> bool {
        self.cost_offset != 0.0 || self.cost_scale != 1.0
    }
}

fn experiment_n(cfg: &ExperimentConfig) -> Result<usize> {
    cfg.experiment
        .n
        .ok_or_else(|| Error::Config("missing experiment.n".into()))
}

fn experiment_layers(cfg: &ExperimentConfig) -> Result<usize> {
    cfg.experiment
        .layers
        .ok_or_else(|| Error::Config("missing experiment.layers".into()))
}

fn experiment_p(cfg: &ExperimentConfig) -> Result<usize> {
    cfg.experiment
        .p
        .ok_or_else(|| Error::Config("missing experiment.p".into()))
}

/// The TFIM couplings used across the VQE workloads.
pub const TFIM_J: f64 = 1.0;
pub const TFIM_DELTA: f64 = 1.5;

/// Transverse-field mixer `Σ_j X_j`.
pub fn mixer_x(n: usize) -> Observable {
    let terms = (0..n)
        .map(|q| (1.0, PauliString::single(n, q, PauliLetter::X)))
        .collect();
    Observable::new(n, terms).expect("well formed")
}

/// Builds the workload for a circuit-backed experiment kind.
pub fn build_circuit_experiment(cfg: &ExperimentConfig) -> Result<CircuitExperiment> {
    let mut exp = build_circuit_experiment_raw(cfg)?;
    if cfg.experiment.normalize_cost {
        let e0 = exp.ground_energy.ok_or_else(|| {
            Error::Config("normalize_cost needs a ground-energy reference".into())
        })?;
        let shift = match (cfg.output.shift, cfg.output.shift_ratio) {
            (Some(c), _) => c,
            (None, Some(r)) => r * e0,
            (None, None) => exp.default_shift.unwrap_or(0.0),
        };
        let scale = (e0 - shift).abs();
        if scale == 0.0 {
            return Err(Error::Config(
                "normalize_cost is degenerate: E_GS equals the shift".into(),
            ));
        }
        exp.cost_offset = shift;
        exp.cost_scale = scale;
    }
    Ok(exp)
}

fn build_circuit_experiment_raw(cfg: &ExperimentConfig) -> Result<CircuitExperiment> {
    match cfg.experiment.kind {
        ExperimentKind::TfimVqe | ExperimentKind::HeaVqe | ExperimentKind::SpsaCompare
        | ExperimentKind::NoiseHist => {
            let n = experiment_n(cfg)?;
            let layers = experiment_layers(cfg)?;
            let hamiltonian = build_tfim(n, TFIM_J, TFIM_DELTA)?;
            let circuit = match cfg.experiment.kind {
                ExperimentKind::HeaVqe => build_hea(n, layers)?,
                _ => build_qaoa_like_tfim(n, layers)?,
            };
            let (e0, basis) = ground_space(&hamiltonian, 1e-8)?;
            Ok(CircuitExperiment {
                runner: StateRunner::Gates {
                    circuit,
                    initial: StateVector::zero_state(n),
                },
                kernel: CostKernel::Energy(hamiltonian),
                ground_energy: Some(e0),
                ground_basis: Some(FidelityTarget::new(basis)?),
                default_metric: if cfg.experiment.kind == ExperimentKind::SpsaCompare {
                    MetricKind::Fidelity
                } else {
                    MetricKind::EnergyRatio
                },
                default_shift: None,
                cost_offset: 0.0,
                cost_scale: 1.0,
            })
        }
        ExperimentKind::IsingQaoa => {
            let n = experiment_n(cfg)?;
            let p = experiment_p(cfg)?;
            let h1 = build_ising_control(n, -4.0)?;
            let h2 = build_ising_control(n, 4.0)?;
            let (_, initial_basis) = ground_space(&build_ising_control(n, -2.0)?, 1e-8)?;
            let (_, target_basis) = ground_space(&build_ising_control(n, 2.0)?, 1e-8)?;
            let initial = initial_basis
                .into_iter()
                .next()
                .ok_or_else(|| Error::Internal("empty ground space".into()))?;
            let target = FidelityTarget::new(target_basis)?;
            let evo = AlternatingEvolution::new(h1, h2, p, initial)?;
            Ok(CircuitExperiment {
                runner: StateRunner::Alternating(evo),
                kernel: CostKernel::Fidelity(target),
                ground_energy: None,
                ground_basis: None,
                default_metric: MetricKind::Fidelity,
                default_shift: None,
                cost_offset: 0.0,
                cost_scale: 1.0,
            })
        }
        ExperimentKind::HeisenbergQaoa => {
            let n = experiment_n(cfg)?;
            let p = experiment_p(cfg)?;
            let (h1, h2) = build_heisenberg_pair(n, 1.0, 0.5)?;
            let total = Observable::linear_combination(1.0, &h1, 1.0, &h2)?;
            let (_, target_basis) = ground_space(&total, 1e-8)?;
            let target = FidelityTarget::new(target_basis)?;
            let bits: String = (0..n).map(|q| if q % 2 == 0 { '1' } else { '0' }).collect();
            let initial = init_basis_state(n, &bits)?;
            let evo = AlternatingEvolution::new(h1, h2, p, initial)?;
            Ok(CircuitExperiment {
                runner: StateRunner::Alternating(evo),
                kernel: CostKernel::Fidelity(target),
                ground_energy: None,
                ground_basis: None,
                default_metric: MetricKind::Fidelity,
                default_shift: None,
                cost_offset: 0.0,
                cost_scale: 1.0,
            })
        }
        ExperimentKind::Maxcut => {
            let layers = experiment_layers(cfg)?;
            let qubo = build_maxcut(&maxcut_paper_graph())?;
            let (e0, _) = brute_force_min(&qubo)?;
            let hamiltonian = qubo_to_ising(&qubo);
            let n = hamiltonian.n_qubits();
            Ok(CircuitExperiment {
                runner: StateRunner::Gates {
                    circuit: build_qubo_ansatz(n, layers)?,
                    initial: StateVector::plus_state(n),
                },
                kernel: CostKernel::Energy(hamiltonian),
                ground_energy: Some(e0),
                ground_basis: None,
                default_metric: MetricKind::EnergyRatio,
                default_shift: None,
                cost_offset: 0.0,
                cost_scale: 1.0,
            })
        }
        ExperimentKind::Tsp => {
            let layers = experiment_layers(cfg)?;
            let qubo = tsp_paper_instance();
            let (e0, _) = brute_force_min(&qubo)?;
            let hamiltonian = qubo_to_ising(&qubo);
            let n = hamiltonian.n_qubits();
            Ok(CircuitExperiment {
                runner: StateRunner::Gates {
                    circuit: build_qubo_ansatz(n, layers)?,
                    initial: StateVector::plus_state(n),
                },
                kernel: CostKernel::Energy(hamiltonian),
                ground_energy: Some(e0),
                ground_basis: None,
                default_metric: MetricKind::ShiftedEnergyRatio,
                // Plot (E − c)/(E_GS − c) with c/E_GS = 3000.
                default_shift: Some(3000.0 * e0),
                cost_offset: 0.0,
                cost_scale: 1.0,
            })
        }
        ExperimentKind::Factoring => {
            let p = experiment_p(cfg)?;
            let hamiltonian = build_factoring_143();
            let n = hamiltonian.n_qubits();
            let (e0, _) = crate::qubo::brute_force_min_diagonal(&hamiltonian)?;
            let evo = AlternatingEvolution::new(
                hamiltonian.clone(),
                mixer_x(n),
                p,
                StateVector::plus_state(n),
            )?;
            Ok(CircuitExperiment {
                runner: StateRunner::Alternating(evo),
                kernel: CostKernel::Energy(hamiltonian),
                ground_energy: Some(e0),
                ground_basis: None,
                default_metric: MetricKind::ShiftedEnergyRatio,
                // The factoring cost has ground energy 0, so the plain ratio
                // is undefined; shifting by the clause-cost offset recovers a
                // ratio that climbs to 1.
                default_shift: Some(5.0),
                cost_offset: 0.0,
                cost_scale: 1.0,
            })
        }
        ExperimentKind::Stability => Err(Error::Config(
            "stability is a synthetic experiment; no circuit to build".into(),
        )),
    }
}

/// Resolves the reporter for the configured (or default) metric.
pub fn build_reporter(
    cfg: &ExperimentConfig,
    exp: &CircuitExperiment,
) -> Result<Box<dyn Reporter + Send + Sync>> {
    let metric = cfg.output.metric.unwrap_or(exp.default_metric);
    Ok(match metric {
        MetricKind::None => Box::new(NoMetric),
        MetricKind::EnergyRatio | MetricKind::ShiftedEnergyRatio => {
            let ground_energy = exp.ground_energy.ok_or_else(|| {
                Error::Config("energy-ratio metric needs a ground-energy reference".into())
            })?;
            let shift = if metric == MetricKind::EnergyRatio {
                0.0
            } else {
                match (cfg.output.shift, cfg.output.shift_ratio) {
                    (Some(c), _) => c,
                    (None, Some(r)) => r * ground_energy,
                    (None, None) => exp.default_shift.ok_or_else(|| {
                        Error::Config(
                            "shifted metric needs output.shift or output.shift_ratio".into(),
                        )
                    })?,
                }
            };
            if exp.is_normalized() {
                // The cost channel already reads (E − c)/s, so the plotted
                // ratio is the cost against its own ground value.
                let ground_cost = (ground_energy - exp.cost_offset) / exp.cost_scale;
                Box::new(EnergyRatio {
                    ground_energy: ground_cost,
                    shift: (shift - exp.cost_offset) / exp.cost_scale,
                })
            } else {
                Box::new(EnergyRatio {
                    ground_energy,
                    shift,
                })
            }
        }
        MetricKind::Fidelity => match &exp.kernel {
            CostKernel::Fidelity(_) => Box::new(FidelityFromCost),
            CostKernel::Energy(_) => {
                let target = exp.ground_basis.clone().ok_or_else(|| {
                    Error::Config("fidelity metric needs a ground-space target".into())
                })?;
                Box::new(StateFidelity {
                    runner: exp.runner.clone(),
                    target,
                })
            }
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::ExperimentConfig;

    fn cfg_for(kind_block: &str) -> ExperimentConfig {
        let text = format!(
            r#"
            [experiment]
            {kind_block}

            [optimizer]
            budget = 100
            trials = 1
            seed = 1
            [optimizer.rcd]
            a = 0.1

            [noise]
            model = "exact"

            [output]
            dir = "out/test"
            "#
        );
        ExperimentConfig::parse(&text).unwrap()
    }

    #[test]
    fn maxcut_experiment_wiring() {
        let cfg = cfg_for("kind = \"maxcut\"\nlayers = 5");
        let exp = build_circuit_experiment(&cfg).unwrap();
        assert_eq!(exp.d(), 20);
        assert_eq!(exp.ground_energy, Some(-4.0));
        let reporter = build_reporter(&cfg, &exp).unwrap();
        assert_eq!(reporter.metric_name(), "energy_ratio");
        // E = E_GS maps to ratio 1.
        assert_eq!(reporter.metric(&[], -4.0).unwrap(), Some(1.0));
    }

    #[test]
    fn tsp_experiment_wiring() {
        let cfg = cfg_for("kind = \"tsp\"\nlayers = 10");
        let exp = build_circuit_experiment(&cfg).unwrap();
        assert_eq!(exp.d(), 90);
        assert_eq!(exp.ground_energy, Some(202.0));
        let reporter = build_reporter(&cfg, &exp).unwrap();
        // Shifted ratio: (E − c)/(E_GS − c) with c = 3000·E_GS.
        let c = 3000.0 * 202.0;
        let at_gs = reporter.metric(&[], 202.0).unwrap().unwrap();
        assert!((at_gs - 1.0).abs() < 1e-12);
        let halfway = reporter.metric(&[], c).unwrap().unwrap();
        assert!(halfway.abs() < 1e-12);
    }

    #[test]
    fn factoring_experiment_wiring() {
        let cfg = cfg_for("kind = \"factoring\"\np = 20");
        let exp = build_circuit_experiment(&cfg).unwrap();
        assert_eq!(exp.d(), 40);
        assert_eq!(exp.ground_energy, Some(0.0));
        let reporter = build_reporter(&cfg, &exp).unwrap();
        // Shift 5: ratio = (E − 5)/(0 − 5) → 1 at the ground energy.
        assert_eq!(reporter.metric(&[], 0.0).unwrap(), Some(1.0));
        // |+⟩⁴ starts at the mean clause cost 2 → ratio 0.6.
        let start = reporter.metric(&[], 2.0).unwrap().unwrap();
        assert!((start - 0.6).abs() < 1e-12);
    }

    #[test]
    fn ising_qaoa_dimensions() {
        let cfg = cfg_for("kind = \"ising-qaoa\"\nn = 3\np = 10");
        let exp = build_circuit_experiment(&cfg).unwrap();
        assert_eq!(exp.d(), 20);
        assert!(matches!(exp.kernel, CostKernel::Fidelity(_)));
    }

    #[test]
    fn heisenberg_initial_state() {
        let cfg = cfg_for("kind = \"heisenberg-qaoa\"\nn = 4\np = 2");
        let exp = build_circuit_experiment(&cfg).unwrap();
        match &exp.runner {
            StateRunner::Alternating(evo) => {
                let expect = init_basis_state(4, "1010").unwrap();
                assert!((evo.initial().overlap_sq(&expect) - 1.0).abs() < 1e-12);
            }
            _ => panic!("expected alternating runner"),
        }
    }
}

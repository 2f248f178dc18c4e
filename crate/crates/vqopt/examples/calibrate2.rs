//! Scratch calibration for the QUBO workloads (not part of the documented
//! example set).

use vqopt::ansatz::{build_qubo_ansatz, AlternatingEvolution};
use vqopt::estimator::{CostFunction, CostKernel, NoiseModel, StateRunner};
use vqopt::optim::{derive_seed, run_trials, EnergyRatio, Method, OptimizerConfig};
use vqopt::quantum::state::StateVector;
use vqopt::qubo::{
    brute_force_min, build_factoring_143, build_maxcut, maxcut_paper_graph, qubo_to_ising,
    tsp_paper_instance,
};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = args.get(1).map(|s| s.as_str()).unwrap_or("maxcut").to_string();
    let method = args.get(2).map(|s| s.as_str()).unwrap_or("rcd").to_string();
    let a: f64 = args.get(3).and_then(|a| a.parse().ok()).unwrap_or(3.0);
    let budget: u64 = args.get(4).and_then(|a| a.parse().ok()).unwrap_or(1000);
    let trials: usize = args.get(5).and_then(|a| a.parse().ok()).unwrap_or(3);
    let sigma: f64 = args.get(6).and_then(|a| a.parse().ok()).unwrap_or(0.2);
    let init_scale: f64 = args.get(7).and_then(|a| a.parse().ok()).unwrap_or(std::f64::consts::PI);
    let base_seed: u64 = args.get(8).and_then(|a| a.parse().ok()).unwrap_or(42);
    let fixed_init = args.get(9).map(|s| s == "fixed").unwrap_or(false);

    let (runner, hamiltonian, e0, shift) = match kind.as_str() {
        "maxcut" => {
            let q = build_maxcut(&maxcut_paper_graph()).unwrap();
            let h = qubo_to_ising(&q);
            let (e0, _) = brute_force_min(&q).unwrap();
            (
                StateRunner::Gates {
                    circuit: build_qubo_ansatz(4, 5).unwrap(),
                    initial: StateVector::plus_state(4),
                },
                h,
                e0,
                0.0,
            )
        }
        "maxcutn" => {
            // normalized cost units
            let q = build_maxcut(&maxcut_paper_graph()).unwrap();
            let h = qubo_to_ising(&q);
            let (e0, _) = brute_force_min(&q).unwrap();
            (
                StateRunner::Gates {
                    circuit: build_qubo_ansatz(4, 5).unwrap(),
                    initial: StateVector::plus_state(4),
                },
                h,
                e0,
                -4.0e18, // sentinel: handled below
            )
        }
        "tsp" => {
            let q = tsp_paper_instance();
            let h = qubo_to_ising(&q);
            let (e0, _) = brute_force_min(&q).unwrap();
            (
                StateRunner::Gates {
                    circuit: build_qubo_ansatz(9, 10).unwrap(),
                    initial: StateVector::plus_state(9),
                },
                h,
                e0,
                3000.0 * e0,
            )
        }
        "factoring" => {
            let h = build_factoring_143();
            let mixer = vqopt::cli::experiments::mixer_x(4);
            let evo =
                AlternatingEvolution::new(h.clone(), mixer, 20, StateVector::plus_state(4))
                    .unwrap();
            (StateRunner::Alternating(evo), h, 0.0, 5.0)
        }
        other => panic!("unknown kind {other}"),
    };
    eprintln!("kind={kind} d={} E0={e0} shift={shift}", runner.d());
    let normalized = kind == "maxcutn";
    let reporter = if normalized {
        EnergyRatio { ground_energy: -1.0, shift: 0.0 }
    } else {
        EnergyRatio { ground_energy: e0, shift }
    };
    let seed = base_seed;
    let d = runner.d();
    let mut cfg = OptimizerConfig::new(
        match method.as_str() {
            "gd" => Method::Gd,
            _ => Method::Rcd,
        },
        a,
        budget,
        seed,
    );
    cfg.record_every = if method == "gd" { 1 } else { 10 };
    let theta0s: Vec<Vec<f64>> = (0..trials)
        .map(|trial| {
            use rand::Rng;
            use rand::SeedableRng;
            let stream = if fixed_init { 0 } else { 1 + trial as u64 };
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(
                seed,
                0xF1AED + stream,
            ));
            (0..d)
                .map(|_| rng.random_range(-init_scale..init_scale))
                .collect()
        })
        .collect();
    let start = std::time::Instant::now();
    let result = run_trials(
        |trial| {
            let cf = CostFunction::new(
                runner.clone(),
                CostKernel::Energy(hamiltonian.clone()),
                NoiseModel::Gaussian {
                    sigma_cost: sigma,
                    sigma_partial: sigma,
                },
                derive_seed(seed, 0xC0DE + trial as u64),
            )?;
            let cf = if normalized {
                cf.with_cost_affine(0.0, e0.abs())?
            } else {
                cf
            };
            Ok((cf, theta0s[trial].clone()))
        },
        trials,
        &cfg,
        &reporter,
    )
    .unwrap();
    eprintln!("elapsed {:?}", start.elapsed());
    for (t, trace) in result.traces.iter().enumerate() {
        println!(
            "trial {t}: final {:?} evals_to_0.9 {:?} evals_to_0.99 {:?} diverged={:?}",
            trace.final_metric(),
            trace.first_evals_reaching_metric(0.9),
            trace.first_evals_reaching_metric(0.99),
            trace.diverged
        );
    }
}

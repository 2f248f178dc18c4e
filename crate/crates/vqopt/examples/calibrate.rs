//! Scratch calibration runs (not part of the documented example set).

use vqopt::ansatz::build_qaoa_like_tfim;
use vqopt::estimator::{CostFunction, CostKernel, NoiseModel, StateRunner};
use vqopt::hamiltonians::build_tfim;
use vqopt::optim::{
    derive_seed, run_trials, EnergyRatio, Method, OptimizerConfig,
};
use vqopt::quantum::spectral::ground_space;
use vqopt::quantum::state::StateVector;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(6);
    let layers: usize = args.get(2).and_then(|a| a.parse().ok()).unwrap_or(18);
    let method = args.get(3).map(|s| s.as_str()).unwrap_or("rcd").to_string();
    let a: f64 = args.get(4).and_then(|a| a.parse().ok()).unwrap_or(0.05);
    let budget: u64 = args.get(5).and_then(|a| a.parse().ok()).unwrap_or(20000);
    let trials: usize = args.get(6).and_then(|a| a.parse().ok()).unwrap_or(3);
    let shots: u64 = args.get(7).and_then(|a| a.parse().ok()).unwrap_or(1000);

    let hamiltonian = build_tfim(n, 1.0, 1.5).unwrap();
    let circuit = build_qaoa_like_tfim(n, layers).unwrap();
    let (e0, _) = ground_space(&hamiltonian, 1e-8).unwrap();
    eprintln!("n={n} layers={layers} d={} E0={e0:.6}", circuit.d());

    let reporter = EnergyRatio {
        ground_energy: e0,
        shift: 0.0,
    };
    let seed = 42u64;
    let d = circuit.d();
    let mut cfg = OptimizerConfig::new(
        match method.as_str() {
            "gd" => Method::Gd,
            _ => Method::Rcd,
        },
        a,
        budget,
        seed,
    );
    cfg.record_every = if method == "gd" { 2 } else { 25 };
    let start = std::time::Instant::now();
    let theta0: Vec<f64> = {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xF1AED));
        (0..d)
            .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect()
    };
    let result = run_trials(
        |trial| {
            let cf = CostFunction::new(
                StateRunner::Gates {
                    circuit: circuit.clone(),
                    initial: StateVector::zero_state(n),
                },
                CostKernel::Energy(hamiltonian.clone()),
                NoiseModel::Shots { shots },
                derive_seed(seed, 0xC0DE + trial as u64),
            )?;
            Ok((cf, theta0.clone()))
        },
        trials,
        &cfg,
        &reporter,
    )
    .unwrap();
    eprintln!("elapsed {:?}", start.elapsed());
    for (t, trace) in result.traces.iter().enumerate() {
        let hit99 = trace.first_evals_reaching_metric(0.99);
        let hit95 = trace.first_evals_reaching_metric(0.95);
        println!(
            "trial {t}: final metric {:?} evals_to_0.95 {:?} evals_to_0.99 {:?} diverged={:?}",
            trace.final_metric(),
            hit95,
            hit99,
            trace.diverged
        );
    }
}

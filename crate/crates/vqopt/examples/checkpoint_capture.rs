//! Captures optimization checkpoints to θ files for later reuse by the
//! noise-histogram and diagnostics pipelines.
//!
//! ```bash
//! cargo run --example checkpoint_capture -- <n> <layers> <mode> <out.theta>
//! ```
//!
//! `mode` is `converged` (exact-model RCD run to energy ratio ≥ 0.995) or
//! `suboptimal` (shot-noise RCD stopped at fidelity ≈ 0.88).

use vqopt::ansatz::build_qaoa_like_tfim;
use vqopt::cli::write_theta_file;
use vqopt::estimator::{CostFunction, CostKernel, NoiseModel, Objective, StateRunner};
use vqopt::hamiltonians::{build_tfim, FidelityTarget};
use vqopt::optim::{
    derive_seed, run_rcd, Method, OptimizerConfig, StateFidelity, Target,
};
use vqopt::quantum::spectral::ground_space;
use vqopt::quantum::state::StateVector;

fn main() -> vqopt::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let layers: usize = args.get(2).and_then(|a| a.parse().ok()).unwrap_or(18);
    let mode = args.get(3).map(|s| s.as_str()).unwrap_or("converged").to_string();
    let out = args
        .get(4)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("tfim{n}_{mode}.theta"));
    let seed = 42u64;

    let hamiltonian = build_tfim(n, 1.0, 1.5)?;
    let circuit = build_qaoa_like_tfim(n, layers)?;
    let d = circuit.d();
    let (e0, basis) = ground_space(&hamiltonian, 1e-8)?;
    println!("n={n} layers={layers} d={d} ground energy {e0:.9}");

    let runner = StateRunner::Gates {
        circuit,
        initial: StateVector::zero_state(n),
    };
    let reporter = StateFidelity {
        runner: runner.clone(),
        target: FidelityTarget::new(basis)?,
    };
    let theta0: Vec<f64> = {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng =
            rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xF1AED));
        (0..d)
            .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect()
    };

    let (noise, target, a) = match mode.as_str() {
        "converged" => (NoiseModel::Exact, Target::MetricAtLeast(0.995), 0.05),
        "suboptimal" => (
            NoiseModel::Shots { shots: 1000 },
            Target::MetricAtLeast(0.87),
            0.05,
        ),
        other => {
            eprintln!("unknown mode {other}");
            std::process::exit(2);
        }
    };
    let mut cost = CostFunction::new(
        runner.clone(),
        CostKernel::Energy(hamiltonian.clone()),
        noise,
        derive_seed(seed, 0xC0DE),
    )?;
    let cfg = OptimizerConfig {
        method: Method::Rcd,
        learning_rate: a,
        max_partial_evals: 60_000,
        target: Some(target),
        seed,
        record_every: 5,
        diagnostics_h: None,
    };
    let trace = run_rcd(&mut cost, &theta0, &cfg, &reporter).map_err(|e| {
        vqopt::Error::Internal(format!("capture run failed: {e}"))
    })?;
    let last = trace.rows.last().unwrap();
    let energy = cost.exact_cost(&trace.final_theta)?;
    println!(
        "stopped at n={} evals={} fidelity={:?} energy={:.9} ratio={:.6}",
        last.n,
        last.partial_evals,
        last.metric,
        energy,
        energy / e0
    );
    write_theta_file(std::path::Path::new(&out), &trace.final_theta)?;
    println!("wrote {out}");
    Ok(())
}

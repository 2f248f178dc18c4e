//! Config-driven experiment runner: reproduces each benchmark pipeline from
//! an archived config file, plus QUBO compilation, noise histograms, and
//! trajectory diagnostics.

pub mod config;
pub mod experiments;
pub mod plot;
pub mod runner;

pub use config::{ExperimentConfig, ExperimentKind};
pub use runner::{
    cmd_diagnose, cmd_qubo_compile, cmd_run, noise_hist_samples, read_theta_file,
    write_theta_file, RunStatus, OUT_ROOT_ENV,
};

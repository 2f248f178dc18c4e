use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vqopt::cli::{cmd_diagnose, cmd_qubo_compile, cmd_run, RunStatus};
use vqopt::Error;

/// Variational quantum optimization testbed.
#[derive(Parser)]
#[command(name = "vqopt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        /// Experiment config (TOML).
        config: PathBuf,
        /// Output root; overrides VQOPT_OUT_ROOT.
        #[arg(long)]
        out_root: Option<PathBuf>,
    },
    /// QUBO utilities.
    Qubo {
        #[command(subcommand)]
        command: QuboCommand,
    },
    /// Sample partial-derivative noise histograms at a stored checkpoint.
    NoiseHist {
        /// Experiment config with a [noise_hist] section.
        config: PathBuf,
        #[arg(long)]
        out_root: Option<PathBuf>,
    },
    /// Recompute Lipschitz diagnostics over a run's θ checkpoints.
    Diagnose {
        /// Output directory of a previous `vqopt run`.
        trace_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum QuboCommand {
    /// Compile a QUBO problem file to its Ising listing on stdout.
    Compile { problem: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out_root } => cmd_run(&config, out_root.as_deref()).map(|status| {
            match status {
                RunStatus::Success => ExitCode::SUCCESS,
                RunStatus::TrialDiverged => {
                    eprintln!("warning: at least one trial diverged; artifacts were written");
                    ExitCode::from(3)
                }
            }
        }),
        Command::Qubo {
            command: QuboCommand::Compile { problem },
        } => cmd_qubo_compile(&problem).map(|listing| {
            print!("{listing}");
            ExitCode::SUCCESS
        }),
        Command::NoiseHist { config, out_root } => {
            cmd_run(&config, out_root.as_deref()).map(|_| ExitCode::SUCCESS)
        }
        Command::Diagnose { trace_dir } => cmd_diagnose(&trace_dir).map(|path| {
            println!("wrote {}", path.display());
            ExitCode::SUCCESS
        }),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Config(_) | Error::Parse { .. } | Error::InvalidInput(_) => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

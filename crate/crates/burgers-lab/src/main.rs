//! Experiment orchestration CLI.
//!
//! Exit codes: 0 ok, 2 config error, 3 oracle failure, 4 incomplete run.

use burgers_lab::experiment::run_experiment;
use burgers_lab::{ExperimentConfig, LabError};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "burgers-lab",
    about = "Variational laboratory for the randomly kicked inviscid Burgers equation on the circle",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration file (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Also emit SVG plots.
    #[arg(long, global = true)]
    svg: bool,

    /// Run even when the configuration violates the standing assumptions.
    #[arg(long, global = true)]
    override_assumptions: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one trajectory and dump snapshots.
    Simulate,
    /// Coupled-pair exponential contraction experiment.
    Contract,
    /// Ω-set diameter decay experiment.
    Omega,
    /// Minimiser midpoint-gap experiment.
    MidpointGap,
    /// Stationary-ensemble statistics under two initial laws.
    Stationary,
    /// Coupling upper bound on the dual-Lipschitz distance.
    DualLipschitz,
    /// Run the oracle validation suite for this configuration.
    OracleCheck,
}

impl Command {
    fn kind(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Contract => "contract",
            Command::Omega => "omega",
            Command::MidpointGap => "midpoint-gap",
            Command::Stationary => "stationary",
            Command::DualLipschitz => "dual-lipschitz",
            Command::OracleCheck => "oracle-check",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let mut cfg = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("config error: {e}");
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::default(),
    };
    cfg.experiment.kind = cli.command.kind().to_string();
    if let Some(seed) = cli.seed {
        cfg.forcing.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.experiment.workers = workers;
    }
    if let Some(out) = &cli.out {
        cfg.experiment.out_dir = out.to_string_lossy().into_owned();
    }
    if cli.svg {
        cfg.experiment.svg = true;
    }
    if cli.override_assumptions {
        cfg.experiment.override_assumptions = true;
    }

    match run_experiment(&cfg) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{}: wrote {} artifacts to {} (config {})",
                cfg.experiment.kind,
                outcome.manifest.outputs.len(),
                cfg.experiment.out_dir,
                &outcome.manifest.config_hash[..12],
            );
            if !outcome.manifest.oracle_validated {
                eprintln!(
                    "note: no oracle validation stamp for this configuration; run \
                     `burgers-lab oracle-check` to validate it"
                );
            }
            if !outcome.all_ok {
                eprintln!("oracle/assertion failures; see summary.json");
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(LabError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("run failed (partial results flagged incomplete): {e}");
            ExitCode::from(4)
        }
    }
}

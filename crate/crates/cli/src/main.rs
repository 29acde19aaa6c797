//! `harq-aoi`: analyze, simulate, optimize and sweep HARQ status-update designs.
//!
//! Exit codes: 0 ok, 2 bad parameters, 3 infeasible scheme, 4 internal
//! consistency failure, 1 anything else (I/O).

mod analyze;
mod config;
mod design;
mod grid;
mod manifest;
mod output;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "harq-aoi",
    version,
    about = "Age of information for HARQ with incremental redundancy"
)]
struct Cli {
    /// TOML or JSON parameter file (a run manifest also works). Flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Cap on worker threads for grid evaluation and simulation replicas.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form optimal age and waiting policy for one design.
    Analyze(analyze::AnalyzeCmd),
    /// Monte Carlo estimate of the age, compared against the analysis.
    Simulate(simulate::SimulateCmd),
    /// Grid search over (n, m) for one channel.
    Optimize(grid::OptimizeCmd),
    /// Optimal age versus crossover probability for several data lengths.
    Sweep(grid::SweepCmd),
}

/// Bad or missing parameters (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl UsageError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<harq_aoi::Error>() {
        return match e {
            harq_aoi::Error::InvalidParameter(_) => 2,
            harq_aoi::Error::Infeasible(_) => 3,
            harq_aoi::Error::Consistency(_) => 4,
        };
    }
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(UsageError::new("--threads must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    let config = cli.config.as_deref();
    match cli.command {
        Command::Analyze(cmd) => analyze::run(cmd, config),
        Command::Simulate(cmd) => simulate::run(cmd, config),
        Command::Optimize(cmd) => grid::run_optimize(cmd, config),
        Command::Sweep(cmd) => grid::run_sweep(cmd, config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

//! `mccf`: ingest trajectories, train MC-CF, calibrate baselines, evaluate
//! models and run ring-road experiments.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Overrides;
use crate::error::{invalid, Result};

#[derive(Debug, Parser)]
#[command(name = "mccf", version, about = "Markov chain car-following toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file; omitted fields take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed override.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory override.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse, filter and split trajectory CSV files.
    Ingest,
    /// Train an MC-CF model from a training split.
    Train,
    /// Calibrate baseline car-following models.
    Calibrate,
    /// Score models on a test split.
    Evaluate,
    /// Run a ring-road experiment.
    Simulate,
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| invalid(format!("cannot configure thread pool: {e}")))?;
    }
    let ov = Overrides {
        seed: cli.common.seed,
        out: cli.common.out,
    };
    let path = cli.common.config.as_deref();
    match cli.command {
        Command::Ingest => commands::ingest::run(config::load(path)?, &ov),
        Command::Train => commands::train::run(config::load(path)?, &ov),
        Command::Calibrate => commands::calibrate::run(config::load(path)?, &ov),
        Command::Evaluate => commands::evaluate::run(config::load(path)?, &ov),
        Command::Simulate => commands::simulate::run(config::load(path)?, &ov),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

mod config;
mod couple;
mod criterion;
mod output;
mod polya;
mod rwre;
mod simulate;
mod urn_verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use reinforce_sim::Error;

/// Simulation and verification toolkit for two-particle edge-reinforced walks.
#[derive(Debug, Parser)]
#[command(name = "reinforce-sim", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo meeting statistics of the direct weight dynamics.
    #[command(allow_negative_numbers = true)]
    Simulate(simulate::Args),
    /// Exact total-variation check between the direct and urn dynamics.
    #[command(name = "urn-verify", allow_negative_numbers = true)]
    UrnVerify(urn_verify::Args),
    /// Coupled runs with ordering check and optional marginal test.
    #[command(allow_negative_numbers = true)]
    Couple(couple::Args),
    /// Transience and return-time criteria over a Beta parameter grid.
    #[command(allow_negative_numbers = true)]
    Criterion(criterion::Args),
    /// Polya urn limit-law experiment with a KS report.
    #[command(allow_negative_numbers = true)]
    Polya(polya::Args),
    /// Difference-recurrence curve of two reflected chains.
    #[command(allow_negative_numbers = true)]
    Rwre(rwre::Args),
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or environment (exit 2).
    Usage(String),
    /// An invariant or statistical check failed (exit 1).
    Falsified(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::SubUnitWeight { .. }
            | Error::HorizonTooLarge { .. }
            | Error::Mismatch(_) => CliError::Usage(e.to_string()),
            _ => CliError::Falsified(e.to_string()),
        }
    }
}

/// Run `f` on a pool of `workers` threads, or the global pool.
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::Usage(format!("cannot start {n} workers: {e}"))),
    }
}

pub fn run(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::UrnVerify(a) => urn_verify::run(a),
        Command::Couple(a) => couple::run(a),
        Command::Criterion(a) => criterion::run(a),
        Command::Polya(a) => polya::run(a),
        Command::Rwre(a) => rwre::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Falsified(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

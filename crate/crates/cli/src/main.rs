//! `noisy-draws`: bias-corrected latent distribution estimates from the
//! command line.
//!
//! Exit codes: 0 on success, 2 for bad input, flags or configs, 3 when an
//! estimator cannot produce a result, 4 when `simulate --strict` had to
//! exclude replications. `NOISY_DRAWS_THREADS` caps the worker count.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod bandwidth;
mod estimate;
mod failure;
mod generate;
mod input;
mod output;
mod simulate;

use failure::{Failure, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "noisy-draws", version, about = "Bias-corrected distribution estimates from noisy draws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corrected CDF and quantile tables from estimate-level or panel data.
    Estimate(estimate::EstimateArgs),
    /// Run Monte Carlo experiments from a JSON config.
    Simulate(simulate::SimulateArgs),
    /// Cross-validated bandwidth for the analytic correction.
    Bandwidth(bandwidth::BandwidthArgs),
    /// Write one replication of a simulation design as CSV.
    Generate(generate::GenerateArgs),
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("NOISY_DRAWS_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::input(format!("NOISY_DRAWS_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::input(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Estimate(args) => estimate::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Bandwidth(args) => bandwidth::run(args),
        Command::Generate(args) => generate::run(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}

//! `kfeller`: kernel evaluation, density evolution, simulation and the
//! validation suite from the command line.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 configuration error,
//! 3 numerical singularity, 4 validation failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] kfeller_core::Error),
    #[error("{failed} of {total} validation checks failed")]
    ValidationFailed { failed: usize, total: usize },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use kfeller_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::InvalidParams(_) | E::NegativeTime(_) | E::InvalidInput(_)) => 2,
            CliError::Core(E::Singularity { .. }) => 3,
            CliError::ValidationFailed { .. } => 4,
            CliError::Io(_) | CliError::Core(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "kfeller", version, about = "Jump-diffusion OU kernels with Laplace jumps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fundamental solution on a grid (regular part; atom in the header)
    Kernel(commands::KernelArgs),
    /// Evolution of Gaussian, step or sampled initial data
    Density(commands::DensityArgs),
    /// Exact Monte Carlo with a KS comparison against the kernel
    Simulate(commands::SimulateArgs),
    /// Cross-oracle checks
    Validate(commands::ValidateArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Kernel(a) => commands::run_kernel(a),
        Command::Density(a) => commands::run_density(a),
        Command::Simulate(a) => commands::run_simulate(a),
        Command::Validate(a) => commands::run_validate(a),
    };
    match res {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

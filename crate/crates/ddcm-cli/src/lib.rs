//! Command-line front end for the data-driven elasticity solvers:
//! dataset generation, experiment execution, convergence sweeps, cyclic
//! (rope) test ingestion, and the enumeration-oracle comparison.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 solver
//! failure, 4 enumeration budget exceeded.

pub mod commands;
pub mod config;
pub mod output;

use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Budget(_) => 4,
        }
    }

    pub(crate) fn io(context: &str, e: std::io::Error) -> Self {
        CliError::Config(format!("{context}: {e}"))
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "ddcm",
    about = "Data-driven solvers for 1D elasticity: bars and planar trusses",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a material dataset and write it as CSV.
    Generate(commands::GenerateArgs),
    /// Solve an experiment config and write run records plus plot data.
    Solve(commands::SolveArgs),
    /// Run a mesh-by-dataset convergence study of the bar benchmark.
    Converge(commands::ConvergeArgs),
    /// Three-phase cyclic (rope) pipeline producing a load-deflection curve.
    Rope(commands::RopeArgs),
    /// Compare the enumeration oracle against ADM and GO-ADM.
    Oracle(commands::OracleArgs),
}

/// Runs a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Generate(args) => commands::generate(&args),
        Command::Solve(args) => commands::solve(&args),
        Command::Converge(args) => commands::converge(&args),
        Command::Rope(args) => commands::rope(&args),
        Command::Oracle(args) => commands::oracle(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

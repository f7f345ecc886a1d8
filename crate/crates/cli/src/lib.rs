//! Command-line front end: `analyze` a CSV file, `simulate` the synthetic
//! study, or `oracle-check` the bound formulas against brute force.
//!
//! Exit codes: 0 success, 1 oracle check failed or I/O error, 2 invalid
//! input or configuration, 3 estimation failure.

pub mod commands;
pub mod io;
pub mod settings;

use clap::{Parser, Subcommand};
use confound_bounds::Error;

#[derive(Debug, Parser)]
#[command(
    name = "confound-bounds",
    version,
    about = "ATE bounds under a proportion of confounded units"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound curves, bands and eps0 for a CSV dataset.
    Analyze(settings::AnalyzeArgs),
    /// Monte Carlo study on the synthetic data-generating process.
    Simulate(settings::SimulateArgs),
    /// Randomised brute-force checks of the bound formulas.
    OracleCheck(settings::OracleArgs),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Validation(String),
    Estimation(String),
    OracleCheck,
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Estimation(_) => 3,
            Failure::OracleCheck | Failure::Io(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonBinaryTreatment { .. }
            | Error::OutcomeOutOfRange { .. }
            | Error::NonFiniteEntry { .. }
            | Error::TooFewObservations { .. }
            | Error::DegenerateOutcomeRange { .. }
            | Error::DimensionMismatch(_)
            | Error::InvalidConfig(_)
            | Error::ProbabilityOutOfRange { .. } => Failure::Validation(e.to_string()),
            Error::Io(m) => Failure::Io(m),
            other => Failure::Estimation(other.to_string()),
        }
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Analyze(a) => commands::analyze(&a),
        Command::Simulate(s) => commands::simulate(&s),
        Command::OracleCheck(o) => commands::oracle_check(&o),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Validation(m) => eprintln!("error: {m}"),
                Failure::Estimation(m) => eprintln!("estimation failed: {m}"),
                Failure::Io(m) => eprintln!("i/o error: {m}"),
                Failure::OracleCheck => {}
            }
            f.exit_code()
        }
    }
}

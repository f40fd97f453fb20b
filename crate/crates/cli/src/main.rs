//! `rotor`: propagate single pulses, run (P, sigma) sweeps, evaluate the
//! two-level zero loci and run the reproduction checks.
//!
//! Exit codes: 0 success, 1 usage error, 2 numeric or convergence failure
//! (including I/O failures while writing results), 3 validation failure.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Command, RunArgs};

#[derive(Parser, Debug)]
#[command(name = "rotor", version, about = "Polar rigid rotor driven by a rectangular electric pulse")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Propagate |J0, 0> through one pulse and report the final state.
    Propagate(RunArgs),
    /// Sweep a (P, sigma) grid and detect energy drops and surface minima.
    Sweep(RunArgs),
    /// Two-level zero loci (and amplitudes at the given sigma values).
    Analytic(RunArgs),
    /// Run the reproduction checks and print a pass/fail table.
    Validate(RunArgs),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Io(String),
    ValidationFailed(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numeric(_) | CliError::Io(_) => 2,
            CliError::ValidationFailed(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Io(m) => write!(f, "i/o failure: {m}"),
            CliError::ValidationFailed(n) => write!(f, "{n} validation check(s) failed"),
        }
    }
}

impl From<pulsed_rotor::Error> for CliError {
    fn from(e: pulsed_rotor::Error) -> Self {
        use pulsed_rotor::Error as E;
        match e {
            E::Domain(m) => CliError::Usage(m),
            E::Io { .. } | E::Serde(_) => CliError::Io(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, args) = match &cli.command {
        Sub::Propagate(a) => (Command::Propagate, a),
        Sub::Sweep(a) => (Command::Sweep, a),
        Sub::Analytic(a) => (Command::Analytic, a),
        Sub::Validate(a) => (Command::Validate, a),
    };
    let result = config::resolve(command, args).and_then(|cfg| commands::run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rotor: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! Command-line surface for current status density estimation.
//!
//! Four subcommands: `simulate` draws synthetic data, `estimate` turns a CSV
//! data set into density/distribution curves, `bandwidth` reports the
//! data-driven bandwidth with its audit trail, and `verify` runs the Monte
//! Carlo check suites.
//!
//! Exit codes: 0 success, 1 usage, 2 data or I/O error, 3 verification
//! failure. `CSKDE_THREADS` caps the worker pool; results are invariant to
//! it.

mod commands;
mod data;
mod parse;

use std::fmt;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cskde",
    version,
    about = "Kernel density and distribution estimation for current status data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic current status data set and write it as CSV.
    Simulate(commands::SimulateArgs),
    /// Estimate density and distribution curves from a CSV data set.
    Estimate(commands::EstimateArgs),
    /// Select a bandwidth from a data set and print an audit report.
    Bandwidth(commands::BandwidthArgs),
    /// Run the Monte Carlo verification checks.
    Verify(commands::VerifyArgs),
}

/// Failures after argument parsing. Usage problems exit with 1, data and
/// I/O problems with 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) => f.write_str(msg),
        }
    }
}

impl From<cskde::Error> for CliError {
    fn from(e: cskde::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Caps the global worker pool when `CSKDE_THREADS` is set. Estimates and
/// reports are byte-identical for any cap.
fn setup_threads() -> Result<(), CliError> {
    match std::env::var("CSKDE_THREADS") {
        Ok(raw) => {
            let threads: usize = raw.trim().parse().map_err(|_| {
                CliError::Usage(format!(
                    "CSKDE_THREADS must be a positive integer, got `{raw}`"
                ))
            })?;
            if threads == 0 {
                return Err(CliError::Usage(
                    "CSKDE_THREADS must be a positive integer".to_string(),
                ));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
        }
        Err(_) => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = setup_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code());
    }
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(&args).map(|()| ExitCode::SUCCESS),
        Command::Estimate(args) => commands::estimate(&args).map(|()| ExitCode::SUCCESS),
        Command::Bandwidth(args) => commands::bandwidth(&args).map(|()| ExitCode::SUCCESS),
        Command::Verify(args) => commands::verify(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

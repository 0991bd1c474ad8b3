//! Command-line experiments for Lambertian reflections in a semi-infinite tube.
//!
//! Each subcommand resolves an [`ExperimentConfig`], runs it and emits a
//! [`ResultTable`] as CSV or JSON. Outputs depend only on the resolved
//! config, never on the worker count.

pub mod commands;
pub mod config;
pub mod table;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{Command, ExperimentConfig, Format, Overrides};
pub use table::{Columns, ResultTable};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical tolerance not met: {0}")]
    Tolerance(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(lambert_core::Error),
}

impl CliError {
    /// Process exit code: 2 for configuration errors, 3 for unmet tolerances.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Tolerance(_) => 3,
            CliError::Io(_) | CliError::Core(_) => 1,
        }
    }
}

impl From<lambert_core::Error> for CliError {
    fn from(e: lambert_core::Error) -> Self {
        use lambert_core::Error as E;
        match e {
            E::ToleranceNotMet { .. } => CliError::Tolerance(e.to_string()),
            E::InvalidDimension(_) => CliError::Config(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lambert", version, about = "Lambertian reflections in a semi-infinite tube")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Empirical CDFs of the exit radius against r^(d-1).
    ExitCdf(#[command(flatten)] Overrides),
    /// Survival of the axial step: quadrature, simulation and tail fit.
    Tail(#[command(flatten)] Overrides),
    /// Ladder estimate of the undershoot ratio law.
    Lambda(#[command(flatten)] Overrides),
    /// Scaled visit counts below the exit level.
    Renewal(#[command(flatten)] Overrides),
    /// Trajectory-wise check of the ratio / offset-disc identity.
    DiscIdentity(#[command(flatten)] Overrides),
    /// Analytic constants as JSON.
    Constants(#[command(flatten)] Overrides),
}

impl Sub {
    pub fn parts(&self) -> (Command, &Overrides) {
        match self {
            Sub::ExitCdf(o) => (Command::ExitCdf, o),
            Sub::Tail(o) => (Command::Tail, o),
            Sub::Lambda(o) => (Command::Lambda, o),
            Sub::Renewal(o) => (Command::Renewal, o),
            Sub::DiscIdentity(o) => (Command::DiscIdentity, o),
            Sub::Constants(o) => (Command::Constants, o),
        }
    }
}

/// Resolves and runs `cli`, writing to `--out` or to `stdout`. Returns the
/// files written.
pub fn run<W: Write>(cli: &Cli, stdout: &mut W) -> Result<Vec<PathBuf>, CliError> {
    let (command, overrides) = cli.command.parts();
    let config = ExperimentConfig::resolve(command, overrides)?;
    let table = commands::run(&config)?;
    match &config.out {
        Some(path) => table.write(path, config.format),
        None => {
            table.print(stdout, config.format).map_err(|e| CliError::Io(e.to_string()))?;
            Ok(Vec::new())
        }
    }
}

//! Library half of the `qutrit-floquet` command: argument definitions,
//! configuration, output writers and the figure reproduction runs.

pub mod cli;
pub mod commands;
pub mod config;
pub mod output;
pub mod reproduce;

use std::path::Path;
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("engine failure: {0}")]
    Engine(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Engine(_) => 4,
            CliError::Io(_) => 1,
        })
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<qutrit_floquet::phase::PhaseError> for CliError {
    fn from(e: qutrit_floquet::phase::PhaseError) -> Self {
        CliError::Config(e.to_string())
    }
}

pub fn engine_err(e: impl std::fmt::Display) -> CliError {
    CliError::Engine(e.to_string())
}

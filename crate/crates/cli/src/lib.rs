//! Library side of the `mimosar` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod pipeline;
pub mod quicklook;
pub mod report;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("report schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Core(#[from] mimosar::Error),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(mimosar::Error::InvalidConfig(_)) => 2,
            CliError::Core(
                mimosar::Error::TooFewGcps { .. }
                | mimosar::Error::Unobservable { .. }
                | mimosar::Error::Signal(_)
                | mimosar::Error::Geometry(_),
            ) => 3,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

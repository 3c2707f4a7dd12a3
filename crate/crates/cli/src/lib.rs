//! Command-line front end for `spiral-anchor`: trajectories, parameter scans,
//! the excitable-media experiment and the acceptance suite.

pub mod commands;
pub mod manifest;
pub mod verify;

use spiral_anchor::Error;

pub use commands::{cmd_bundle, cmd_rdas, cmd_scan, RunOptions};
pub use manifest::{sha256_file, OutputDigest, RunManifest};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const OVERRIDE_REQUIRED: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    OverrideRequired(String),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Numerical(_) => exit::NUMERICAL,
            CliError::OverrideRequired(_) => exit::OVERRIDE_REQUIRED,
            CliError::Io { .. } | CliError::Failed(_) => exit::FAILURE,
        }
    }

    pub fn io(context: impl std::fmt::Display) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.to_string();
        move |source| CliError::Io { context, source }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Unsupported(_) | Error::ModeOutOfRange { .. } | Error::Snapshot(_) => {
                CliError::Config(e.to_string())
            }
            Error::Io(source) => CliError::Io { context: "i/o".into(), source },
            other => CliError::Numerical(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

//! Batch driver for the umbra shadow-removal library: configuration files,
//! the `umbra` subcommands, evaluation tables, benchmarking and synthetic
//! test scenes.

pub mod commands;
pub mod config;
pub mod synth;

use std::path::PathBuf;

use thiserror::Error;

pub use config::PipelineConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] umbra_core::Error),

    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        use umbra_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Config(_) => 5,
            CliError::Core(e) => match e {
                E::Io { .. } | E::Image { .. } | E::UnsupportedFormat { .. } => 3,
                E::Dimension(_) => 4,
                E::InvalidConfig(_) => 5,
                E::InvalidInput(_) | E::NoReferences(_) => 1,
            },
        }
    }
}

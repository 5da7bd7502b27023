//! Experiment harness: config files, presets, batch runs and artifact output
//! (CSV traces, SVG plots, JSON summaries).

pub mod check;
pub mod config;
pub mod output;
pub mod presets;
pub mod run;

use std::path::PathBuf;

/// Environment variable overriding the output directory of every run.
pub const OUTPUT_DIR_ENV: &str = "SIHG_OUTPUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(#[from] sihg::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => EXIT_CHECK_FAILED,
            _ => EXIT_ERROR,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

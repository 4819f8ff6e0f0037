//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// All failure modes surfaced by the pipeline.
///
/// The CLI maps these onto exit codes, so the variants are grouped by kind:
/// configuration problems, data validation problems, and numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("schema error in {path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("validation error in cycle {cycle}: {reason}")]
    CycleValidation { cycle: u32, reason: String },

    #[error("join error: cycle {cycle} {reason}")]
    Join { cycle: u32, reason: String },

    #[error("numerical failure at iteration {iteration}: {reason}")]
    NonFinite { iteration: u64, reason: String },

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

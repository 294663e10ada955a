use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate.
///
/// An infeasible critic update is not an error: it is reported as `None`
/// by the update routines and triggers the stabilizer fallback.
#[derive(Debug, Error)]
pub enum CalfError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("solver breakdown: {0}")]
    Solver(String),

    #[error("critic initialization failed: {0}")]
    Init(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record {path}: {msg}")]
    Parse { path: PathBuf, msg: String },
}

pub type Result<T> = std::result::Result<T, CalfError>;

impl CalfError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CalfError::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the MC-CF toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("model file error: {0}")]
    Schema(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("statistical test error: {0}")]
    Test(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Coarse category used by command-line front ends to pick an exit code.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } | Error::Csv(_) => ErrorKind::Io,
            Error::Degenerate(_) | Error::Numerical(_) | Error::Calibration(_) => {
                ErrorKind::Numerical
            }
            _ => ErrorKind::Validation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Numerical,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

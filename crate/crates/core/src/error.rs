use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed caller input: out-of-range indices, length mismatches,
    /// infeasible quotas, bad table rows.
    #[error("input error: {0}")]
    Input(String),

    /// An algorithm or model parameter outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps a numerical failure with the run/episode where it happened.
    pub fn with_context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::Numerical(msg) => Error::Numerical(format!("{ctx}: {msg}")),
            Error::Input(msg) => Error::Input(format!("{ctx}: {msg}")),
            Error::Parameter(msg) => Error::Parameter(format!("{ctx}: {msg}")),
            other => other,
        }
    }
}

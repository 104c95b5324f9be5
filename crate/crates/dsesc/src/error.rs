//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument is outside its documented domain (k > n, tau <= 0, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A structural constraint was violated (e.g. nonzero coefficient diagonal).
    #[error("constraint violated: {0}")]
    Constraint(String),

    /// Iterative numerics failed to converge or produced non-finite values.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Training diverged (non-finite loss).
    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    /// Experiment configuration failed validation.
    #[error("invalid config: {0}")]
    Config(String),

    /// A data or checkpoint file failed to parse.
    #[error("parse error in {path} (line {line}): {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

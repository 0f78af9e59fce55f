//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor precondition or type invariant was violated.
    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },

    /// Inputs that are individually valid do not fit together
    /// (shape mismatch, misaligned grids, incompatible indices).
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    /// Geometry that makes an operation singular (evaluation at a source
    /// point, transmitter on the measurement plane, ...).
    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    /// Scenario configuration could not be parsed or validated.
    /// `location` is a JSON field path or line/column context.
    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    /// Filesystem failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            why: why.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use thiserror::Error;

/// Errors raised anywhere in the simulator and experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Dimension or register mismatch between operators, states and layouts.
    #[error("structural error: {0}")]
    Structural(String),

    /// A parameter is outside its admissible range.
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: &'static str, reason: String },

    /// A probability vector that violates the distribution invariants.
    #[error("invalid distribution: {0}")]
    Distribution(String),

    /// The requested simulation does not fit the configured size limits.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context}: {reason}")]
    Parse { context: String, reason: String },
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn parameter(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

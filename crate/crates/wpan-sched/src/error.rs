//! Error taxonomy shared across the crate.
//!
//! Exit-code mapping: configuration and domain errors are operator mistakes
//! (exit 1), invariant violations indicate a broken schedule and are
//! reported distinctly (exit 2).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A config file entry failed to parse or validate.
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    /// Inputs are outside the supported parameter space.
    #[error("invalid input: {0}")]
    Domain(String),

    /// A schedule or internal state violated a structural invariant.
    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented invariant.
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// A config file could not be parsed. `line` is 1-based.
    #[error("{}:{line}: `{key}`: {reason}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        key: String,
        reason: String,
    },

    #[error("invalid input: {0}")]
    Input(String),

    /// A signal went non-finite during a simulation run.
    #[error("non-finite `{signal}` at step {step}")]
    NonFinite { step: usize, signal: &'static str },

    #[error("CSV column `{0}` missing or malformed")]
    Column(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Returns a config error naming `field` unless `ok` holds.
pub(crate) fn ensure(ok: bool, field: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(field, reason))
    }
}

use thiserror::Error;

/// Errors produced by simulation building blocks.
#[derive(Debug, Error)]
pub enum Error {
    /// Two series that must share a horizon or step duration do not.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A value or specification failed a domain check.
    #[error("validation: {0}")]
    Validation(String),

    /// A data file could not be parsed.
    #[error("parse error in {path} (row {row}): {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },

    /// Scenario configuration is unusable.
    #[error("config: {0}")]
    Config(String),

    /// A negotiation protocol rule was broken.
    #[error("protocol: {0}")]
    Protocol(String),

    /// A bounded search ran out of attempts.
    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Crate-wide error type. Variants carry enough context that the CLI can print
/// them verbatim as a one-line diagnostic.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Jsonl { line: usize, msg: String },

    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Invalid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

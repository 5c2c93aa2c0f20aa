//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown identifier `{name}`")]
    UnknownIdentifier { name: String },

    #[error("index out of range: `{name}` exceeds dimension n={n}")]
    IndexOutOfRange { name: String, n: usize },

    #[error("domain error in `{subtree}`: {message}")]
    Domain { subtree: String, message: String },

    #[error("missing parameter `{name}`")]
    MissingParameter { name: String },

    #[error("contact degenerate: elementary action rho = {rho:e} is below threshold")]
    ContactDegenerate { rho: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the library. Pure numerical routines never fail on
/// finite input; everything here is an input or I/O problem.
#[derive(Debug, Error)]
pub enum PikeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("closed form not available for {0}")]
    NotAvailable(&'static str),

    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PikeError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        PikeError::InvalidInput(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        PikeError::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, PikeError>;

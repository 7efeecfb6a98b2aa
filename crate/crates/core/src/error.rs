use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A hard cap (exhaustive search size, recursion depth) would be exceeded.
    #[error("refused: {0}")]
    Refused(String),

    #[error("PGM parse error at byte {offset}: {message}")]
    Pgm { offset: usize, message: String },

    #[error("container decode error at byte {offset}: {message}")]
    Decode { offset: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn refused(msg: impl Into<String>) -> Self {
        Error::Refused(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

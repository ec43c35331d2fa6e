use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("byte offset {offset}: {message}")]
    Gml { offset: usize, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("generation failed: {0}")]
    Generation(String),

    /// Iterative solver could not make progress (operator maps every
    /// start vector it tried to zero).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(message: impl Into<String>) -> Result<T> {
    Err(Error::Validation(message.into()))
}

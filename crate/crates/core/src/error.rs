//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular matrix: pivot {pivot:e} at column {column} (threshold {threshold:e})")]
    SingularMatrix { column: usize, pivot: f64, threshold: f64 },
    #[error("singular patch matrix at vertex {vertex}")]
    SingularPatch { vertex: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

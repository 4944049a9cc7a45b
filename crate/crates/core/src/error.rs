use thiserror::Error;

/// Errors raised by the state, decomposition, discord and reduction routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("inconsistent result: {0}")]
    Inconsistency(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

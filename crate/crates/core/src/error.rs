use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The request is well-formed but has no exact answer under this
    /// engine (e.g. threshold-mode disagreement needs Monte Carlo).
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("arity mismatch: protocol expects {expected} sensors, panel has {actual}")]
    ArityMismatch { expected: usize, actual: usize },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

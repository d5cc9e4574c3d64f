use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("support not resolvable: {0}")]
    Unresolvable(String),
    #[error("no convergence after {iterations} iterations (last update {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("fixed point diverged after {iterations} iterations")]
    Diverged { iterations: usize },
    #[error("bracket not found: {0}")]
    Bracket(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("divergent quantity: {0}")]
    Divergent(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("scale {scale} is beyond the coefficient table (length {len})")]
    ScaleOutOfRange { scale: usize, len: usize },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("flow step invalid at scale {scale}: 1 - gamma*beta*g = {factor}")]
    InvalidStep { scale: usize, factor: f64 },
    #[error("negative multiplier {value} in slice {slice}")]
    NegativeMultiplier { slice: usize, value: f64 },
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
    #[error("coefficient table: {0}")]
    Table(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

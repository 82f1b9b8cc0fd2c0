use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("windows differ: {left:?} vs {right:?}")]
    WindowMismatch { left: Vec<i64>, right: Vec<i64> },
    #[error("volume too large for exact enumeration: N = {n}, limit {limit}; use the Monte Carlo sampler")]
    TooLarge { n: usize, limit: usize },
    #[error("enumeration guard hit: {count} items exceed the limit {limit}")]
    EnumerationGuard { count: u64, limit: u64 },
    #[error("quadrature did not converge: achieved error estimate {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },
    #[error("schedule exceeds 2^31 at k = {k}; largest feasible k is {largest_feasible}")]
    ScheduleOverflow { k: usize, largest_feasible: usize },
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}

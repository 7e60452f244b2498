use thiserror::Error;

use crate::types::ParamViolation;

/// Errors raised by the optimizer, the Lyapunov construction and the
/// certificate checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vector is empty")]
    EmptyVector,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("negative second-moment entry s[{index}] = {value}")]
    NegativeMoment { index: usize, value: f64 },

    #[error("negative argument {0} (function is defined on [0, inf))")]
    NegativeArgument(f64),

    #[error("invalid step input u = {0} (must be finite and >= 0)")]
    InvalidInput(f64),

    #[error("parameter precondition violated: {0}")]
    Precondition(ParamViolation),

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid sampler configuration: {0}")]
    InvalidSampler(String),

    #[error("partition exponent q = {0} outside (0, 1/4)")]
    ExponentOutOfRange(f64),

    #[error("mean-value point not bracketed: divided difference {target} outside [{low}, {high}]")]
    XiNotBracketed { target: f64, low: f64, high: f64 },

    #[error("root not bracketed on [{low}, {high}]")]
    RootNotBracketed { low: f64, high: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

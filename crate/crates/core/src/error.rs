use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid quantizer: {0}")]
    InvalidQuantizer(String),

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for block length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("density support outside the quantizer alphabet: {0}")]
    SupportOutsideAlphabet(f64),

    #[error("work estimate {estimate:.3e} exceeds the configured ceiling {ceiling:.3e}")]
    ResourceLimit { estimate: f64, ceiling: f64 },

    #[error("exponent {n} exceeds the enumeration ceiling {ceiling}; use the Monte Carlo estimator")]
    EnumerationCeiling { n: u32, ceiling: u32 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

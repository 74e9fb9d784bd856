use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} states, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid gamble: {0}")]
    InvalidGamble(String),

    #[error("invalid state space: {0}")]
    InvalidStateSpace(String),

    #[error("invalid rate operator: {0}")]
    InvalidOperator(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step too large: delta = {delta}, operator norm = {norm}, largest admissible step = {bound}")]
    StepTooLarge { delta: f64, norm: f64, bound: f64 },

    #[error("state space of size {size} exceeds the cap of {cap} for this operation")]
    SizeLimit { size: usize, cap: usize },

    #[error("matrix is not row-stochastic: {0}")]
    NonStochastic(String),

    #[error("rate operator is not ergodic")]
    NotErgodic,

    #[error("method inapplicable: {0}")]
    Inapplicable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

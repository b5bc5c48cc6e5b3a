use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state {state} outside 0..={s_max}")]
    StateOutOfRange { state: usize, s_max: usize },

    #[error("threshold {threshold} outside -1..={s_max}")]
    ThresholdOutOfRange { threshold: i64, s_max: usize },

    #[error("degenerate denominator {denominator:e} in closed-form index at R = {threshold}")]
    DegenerateDenominator { threshold: usize, denominator: f64 },

    #[error("{solver} did not reach tolerance within {iterations} iterations (residual {residual:e})")]
    MaxIterationsExceeded {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("no sign change of the greedy action at state {state} for multipliers in [{lo}, {hi}]")]
    BracketNotFound { state: usize, lo: f64, hi: f64 },

    #[error("total event rate is zero; the system cannot move")]
    DeadSystem,

    #[error("invalid feature specification: {0}")]
    InvalidFeatures(String),

    #[error("invalid simulator configuration: {0}")]
    InvalidConfig(String),

    #[error("trace contains no requests")]
    EmptyTrace,

    #[error("timestamp decreases at line {line}")]
    NonMonotonicTimestamps { line: usize },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

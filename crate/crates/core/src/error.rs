use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid resolution mismatch: expected n={expected}, got n={got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("invalid interval: {0}")]
    InvalidInterval(String),

    #[error("invalid grid set: {0}")]
    InvalidSet(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("trial budget of {budget} exhausted before the conditioning event occurred")]
    TrialBudgetExceeded { budget: u64 },

    #[error("{0} is not supported for this set family")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

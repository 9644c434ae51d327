use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value {0} is outside the open unit interval")]
    Domain(f64),

    #[error("dimension {requested} exceeds the {available} dimensions of the direction-number table")]
    UnsupportedDimension { requested: usize, available: usize },

    /// The work budget was exhausted. `partial` is the best value obtained
    /// within the budget, when one exists.
    #[error("budget of {budget} exceeded (needed {needed})")]
    BudgetExceeded {
        budget: u64,
        needed: u64,
        partial: Option<f64>,
    },

    #[error("solver did not converge after {iterations} iterations (marginal error {marginal_error:e})")]
    NotConverged {
        iterations: usize,
        marginal_error: f64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid_arg(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn invalid_param(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

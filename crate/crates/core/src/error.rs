use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A physical or stochastic parameter is out of its admissible range.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: String, reason: String },

    /// A power level does not map to a whole number of energy units per slot.
    #[error("power level {power_w} W maps to {units} energy units per slot, which is not an integer")]
    NonIntegerPower { power_w: f64, units: f64 },

    #[error("cannot consume {consumed} units from a battery holding {available}")]
    InfeasibleConsumption { consumed: usize, available: usize },

    #[error("action (ps={ps_idx}, pd={pd_idx}) is infeasible in state {state}")]
    InfeasibleAction {
        state: String,
        ps_idx: usize,
        pd_idx: usize,
    },

    #[error("state space too large: {0}")]
    StateSpaceOverflow(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("policy has no action for stage {stage}, state {state}")]
    PolicyCoverage { stage: usize, state: usize },

    #[error("malformed policy file at line {line}: {reason}")]
    PolicyFormat { line: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        field: field.into(),
        reason: reason.into(),
    }
}

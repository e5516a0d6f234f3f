use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("matrix is not Hermitian (max deviation {0:e} GHz)")]
    NotHermitian(f64),

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("step budget exceeded: {needed} steps needed, budget is {budget}")]
    StepBudget { needed: u64, budget: u64 },

    #[error("integration failure in segment {segment}: norm drift {drift:e}")]
    NormDrift { segment: usize, drift: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("fit failed: {0}")]
    Fit(String),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.into(), reason: reason.into() }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::StepBudget { .. } | Error::NormDrift { .. } | Error::Fit(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

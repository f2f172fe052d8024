use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("path rejected at step {step}: negative state ({u}, {v})")]
    NegativeState { step: usize, u: f64, v: f64 },

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("invalid sweep: {0}")]
    Sweep(String),

    #[error("invalid sample request: {0}")]
    Sampling(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures that come from the integrator rather than the inputs.
    pub fn is_numeric_abort(&self) -> bool {
        matches!(self, Error::NegativeState { .. } | Error::NonFinite { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

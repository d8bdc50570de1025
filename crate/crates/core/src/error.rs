use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A profile was evaluated outside the interval on which it is defined.
    #[error("time {t} outside profile domain [{lo}, {hi}]")]
    Domain { t: f64, lo: f64, hi: f64 },

    /// A specification failed validation.
    #[error("invalid {field}: {reason}")]
    InvalidSpec { field: String, reason: String },

    /// Numerical integration could not continue.
    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    /// The requested closed form does not apply to the given input.
    #[error("unsupported form: {0}")]
    UnsupportedForm(String),

    /// A thermal factor below one corresponds to no physical temperature.
    #[error("unphysical thermal factor G = {0} (requires G >= 1)")]
    UnphysicalTemperature(f64),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Integration { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

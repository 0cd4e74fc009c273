use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("energy {energy} is numerically in the spectrum (distance {distance:e})")]
    ResonantEnergy { energy: f64, distance: f64 },

    #[error("eigensolver did not converge: {0}")]
    Convergence(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no usable data: {0}")]
    NoData(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// Numerical failures (as opposed to validation failures).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ResonantEnergy { .. } | Error::Convergence(_) | Error::NoData(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the numerical library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: fields live on different Fourier grids")]
    GridMismatch,

    #[error("profile is not square-integrable: {0}")]
    NotSquareIntegrable(String),

    #[error("no decay character: local log-log slope drifts by {drift:.3} (tolerance {tolerance})")]
    NoDecayCharacter { drift: f64, tolerance: f64 },

    #[error("quadrature failed to converge after {panels} panels (relative change {change:.3e})")]
    QuadratureNonConvergence { panels: usize, change: f64 },

    #[error("slope fit: {0}")]
    Fit(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("time series: {0}")]
    Series(String),

    #[error("CFL violation: dt * rate = {number:.3} exceeds cap {cap}")]
    Cfl { number: f64, cap: f64 },

    #[error("non-finite value detected at t = {time}")]
    NonFinite { time: f64 },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

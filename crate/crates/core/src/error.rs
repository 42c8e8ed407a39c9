use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimensions m={m}, n={n}: need m >= n >= 1")]
    InvalidDimensions { m: usize, n: usize },

    #[error("{what} must be finite, got {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("{what}={value} outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("index {index} outside 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("eigenvalue {index} did not converge within {iterations} implicit shifts")]
    NoConvergence { index: usize, iterations: usize },

    #[error("covariance spectrum has eigenvalue {min} below -{tol}")]
    NotPositiveSemidefinite { min: f64, tol: f64 },

    #[error("need at least {needed} {what}, got {got}")]
    TooFew {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("{failed} of {total} replicas failed to decompose")]
    TooManyFailures { failed: usize, total: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub(crate) fn ensure_finite(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { what, value })
    }
}

use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state is not normalized (norm deviation {deviation:.3e})")]
    NotNormalized { deviation: f64 },

    #[error("negative variance {0:.3e} beyond roundoff; state is corrupted")]
    NegativeVariance(f64),

    #[error("{what} did not converge (residual {residual:.3e})")]
    NoConvergence { what: String, residual: f64 },

    #[error("integrator failure: norm drift {drift:.3e}")]
    NormDrift { drift: f64 },

    #[error("level crossing between tracked levels {lower} and {upper} at s = {s:.6} (gap {gap:.3e})")]
    LevelCrossing {
        s: f64,
        lower: usize,
        upper: usize,
        gap: f64,
    },

    #[error("spectral coverage {captured:.12} is insufficient for decomposition")]
    InsufficientCoverage { captured: f64 },

    #[error("{0}")]
    Degenerate(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

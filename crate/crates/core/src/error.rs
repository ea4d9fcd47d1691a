use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Which end of a one-dimensional interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {point:?} is not in the interior of the effective domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0} has no closed-form rate function")]
    NoClosedRate(String),

    #[error("{0} has no sampler")]
    NoSampler(String),

    #[error("oracle is not strictly convex; refusing to pick a preimage")]
    NotStrict,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("minimizer is not unique: {0}")]
    Ambiguous(String),

    #[error("derivative has an infinite one-sided limit at the {0:?} end")]
    InfiniteSlope(Side),

    #[error("no convergence after {iterations} iterations: {context}")]
    NonConvergence { iterations: usize, context: String },
}

impl Error {
    pub(crate) fn no_convergence(iterations: usize, context: impl Into<String>) -> Self {
        Error::NonConvergence {
            iterations,
            context: context.into(),
        }
    }

    /// True for errors caused by bad input rather than the numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Parse(_) | Error::InvalidParameter(_))
    }

    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

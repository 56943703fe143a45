use thiserror::Error;

/// Errors raised by the bound, extremal and oracle routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    /// An argument violates the precondition of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative scheme failed to reach its target.
    #[error("numeric error: {what} did not converge (achieved {achieved:e})")]
    Numeric { what: &'static str, achieved: f64 },

    /// The query is valid but no sharp bound is known for it.
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    /// The operation is only defined for univariate laws.
    #[error("{0} is a joint configuration, not a univariate law")]
    NotUnivariate(&'static str),
}

pub type Result<T> = std::result::Result<T, BoundsError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(BoundsError::Domain(msg.into()))
}

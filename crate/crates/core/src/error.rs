use thiserror::Error;

/// Errors produced by the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),

    #[error("closed-form finite sum needs a positive integer alpha, got alpha = {0}")]
    NonIntegerAlpha(f64),

    /// Evaluation at the shifted-frame origin where the regular part is
    /// not a bounded function (sigma = 0, 0 < alpha <= 1/2).
    #[error("regular part is singular at x = {x} (alpha = {alpha} <= 1/2, sigma = 0)")]
    Singularity { x: f64, alpha: f64 },

    #[error("cannot differentiate a delta term (delta' is not modelled)")]
    DeltaDerivative,

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("no closed form available: {0}")]
    NoClosedForm(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An internal consistency check failed (e.g. the extracted atom weight
    /// disagrees with the Poisson zero-jump probability).
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

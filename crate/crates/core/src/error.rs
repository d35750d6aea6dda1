use alloc::{boxed::Box, string::String};

use crate::lanczos::LanczosState;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {context}: {detail}")]
    ShapeMismatch { context: &'static str, detail: String },

    #[error("mode {mode} out of range for a tensor of order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("dense assembly of size {size} exceeds the limit {limit}")]
    TooLarge { size: usize, limit: usize },

    /// A pivot of an unpivoted tridiagonal factorization fell below the guard.
    #[error("pivot {index} is numerically zero ({value:e})")]
    SingularPivot { index: usize, value: f64 },

    /// The Lanczos recurrence could not be continued past `step`; `partial` holds the
    /// bases and coefficients built so far.
    #[error("Lanczos breakdown at step {step}")]
    LanczosBreakdown { step: usize, partial: Box<LanczosState> },

    #[error("operator annihilates the seed direction")]
    DegenerateSeed,

    #[error("residual is zero, nothing to seed from")]
    ZeroResidual,

    #[error("preconditioner factor Q{index} is numerically singular")]
    SingularPreconditioner { index: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid problem parameters: {0}")]
    InvalidProblem(String),
}

pub(crate) fn shape_err(context: &'static str, detail: String) -> Error {
    Error::ShapeMismatch { context, detail }
}

use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Divergence of a state evolution is *not* an error: it is reported through
/// [`crate::state_evolution::FixedPointStatus::Diverged`] because it is the
/// meaningful answer in the unbounded phase.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An equation in one unknown has no root inside the admissible range.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// A bracketing search ran past its hard limit without enclosing a root or
    /// a minimizer.
    #[error("bracket exhausted: {0}")]
    BracketExhausted(String),

    /// Input lies outside the domain of a closed-form map (e.g. the breakdown
    /// side of the recalibration between capping parameters).
    #[error("domain error: {0}")]
    DomainError(String),

    /// The AMP empirical slope equation has no root at the given iteration.
    #[error("empirical slope equation infeasible at iteration {iteration}")]
    SlopeInfeasible { iteration: usize },

    /// The weighted normal equations of IRLS are rank deficient.
    #[error("singular weighted normal equations at IRLS iteration {iteration}")]
    SingularSystem { iteration: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("data format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

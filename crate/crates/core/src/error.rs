use thiserror::Error;

/// Errors raised by the simulation and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("mode index {mode} out of range for a {n_modes}-mode state")]
    ModeOutOfRange { mode: usize, n_modes: usize },

    #[error("covariance matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("state violates the uncertainty relation (smallest symplectic eigenvalue {0})")]
    Unphysical(f64),

    #[error("covariance minus vacuum is not positive semidefinite (min eigenvalue {0:e}); no P-function")]
    NoPFunction(f64),

    #[error("state must have zero mean for this operation")]
    NonZeroMean,

    #[error(
        "metric tensor is singular and the derivative has a component in its null space (relative residual {0:e})"
    )]
    SingularMetric(f64),

    #[error("{0} diverges at these parameters")]
    Divergent(&'static str),

    #[error("truncated Fock tail mass {tail:e} exceeds the budget {budget:e}")]
    TailBudget { tail: f64, budget: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

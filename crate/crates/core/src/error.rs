use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{what} cap exceeded: {got} > {cap}")]
    CapExceeded {
        what: &'static str,
        got: usize,
        cap: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state is not normalized (norm^2 = {0})")]
    Unnormalized(f64),

    #[error("estimator is incompatible with the model: {0}")]
    IncompatibleEstimator(String),

    #[error("eigensolver did not converge (residual {residual:e})")]
    NonConvergence { residual: f64 },

    #[error("rejection sampling exceeded {0} attempts")]
    RejectionCap(usize),

    #[error("marginal mismatch: total masses {0} and {1}")]
    MarginalMismatch(f64, f64),

    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("non-commuting terms in block {0}")]
    NonCommutingBlock(usize),

    #[error("operator is not traceless (trace = {0:e})")]
    NotTraceless(f64),

    #[error("missing input: {0}")]
    Missing(String),

    #[error("correlation-set audit failed: {0}")]
    AuditFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

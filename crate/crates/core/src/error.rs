use thiserror::Error;

/// Errors raised by the spinmoment library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: max |H - H^dagger| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("{what} exceeds the configured cap of {cap} (requested {requested})")]
    CapExceeded {
        what: &'static str,
        cap: usize,
        requested: usize,
    },

    #[error("invalid spin number: {0}")]
    InvalidSpin(String),

    #[error("not a density operator: {0}")]
    NotAState(String),

    #[error("Casimir violated: tr Re(M) = {found}, expected j(j+1) = {expected}")]
    CasimirViolated { expected: f64, found: f64 },

    #[error("first moments inconsistent: imaginary parts of M disagree by {deviation:e}")]
    InconsistentFirstMoments { deviation: f64 },

    #[error("moment matrix inconsistent: {0}")]
    InconsistentMoments(String),

    #[error("Casimir violated: renormalized second moments must sum to 1, got {sum}")]
    CoordinateSum { sum: f64 },

    #[error("operation requires j >= 1: {0}")]
    SpinTooSmall(&'static str),

    #[error("linearly dependent operators with inconsistent values (mismatch {mismatch:e})")]
    InconsistentConstraints { mismatch: f64 },

    #[error("SDP solver failed after {iterations} iterations: {reason}")]
    SolverFailure { iterations: usize, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised while building or checking a system.
///
/// Input errors (malformed matrices, rejected states or automorphisms, bad
/// configs) are distinguished from internal consistency failures, which
/// signal that an identity the constructions rely on did not hold
/// numerically.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("density is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("state not faithful: minimum density eigenvalue {min_eigenvalue:.3e}")]
    NotFaithful { min_eigenvalue: f64 },

    #[error("density has trace {trace:.12}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error("automorphism rejected: {identity} fails at basis pair ({left}, {right}), residual {residual:.3e}")]
    AutomorphismRejected {
        identity: &'static str,
        left: usize,
        right: usize,
        residual: f64,
    },

    #[error("invalid subsystem: {0}")]
    InvalidSubsystem(String),

    #[error("{operation} requires a tracial state")]
    NotTracial { operation: &'static str },

    #[error("element not in span (residual {residual:.3e})")]
    NotInSpan { residual: f64 },

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by the caller's data rather than by a failed
    /// internal identity.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Internal(_) | Error::Numerical(_) | Error::NotInSpan { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

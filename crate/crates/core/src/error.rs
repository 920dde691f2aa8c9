use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("no interference subspace: all denoised eigenvalues are non-positive")]
    NoInterferenceSubspace,

    #[error("no noise subspace: numeric rank equals dimension {dim}; increase rank_tol")]
    NoNoiseSubspace { dim: usize },

    #[error("recovered {found} atoms but {needed} were requested")]
    InsufficientAtoms { found: usize, needed: usize },

    #[error(
        "solver did not converge after {iterations} iterations \
         (objective {objective:.6e}, primal {primal_residual:.3e}, dual {dual_residual:.3e})"
    )]
    NotConverged {
        iterations: usize,
        objective: f64,
        primal_residual: f64,
        dual_residual: f64,
    },

    #[error("matrix is not positive definite; offending eigenvalues {0:?}")]
    NotPositiveDefinite(Vec<f64>),

    #[error("undefined direction for a zero vector")]
    UndefinedDirection,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn dims(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// Short machine-friendly tag, used in CSV error columns.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::RankDeficient(_) => "rank-deficient",
            Error::NoInterferenceSubspace => "no-interference-subspace",
            Error::NoNoiseSubspace { .. } => "no-noise-subspace",
            Error::InsufficientAtoms { .. } => "insufficient-atoms",
            Error::NotConverged { .. } => "not-converged",
            Error::NotPositiveDefinite(_) => "not-positive-definite",
            Error::UndefinedDirection => "undefined-direction",
            Error::Numerical(_) => "numerical",
            Error::Config(_) => "config",
        }
    }
}

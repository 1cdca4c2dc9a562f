use thiserror::Error;

pub type Result<T, E = EedError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum EedError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "shift rejected at step {step}: sigma = mu - lambda = {mu} - {lambda} = {shift} is not positive"
    )]
    ShiftRejected {
        step: usize,
        mu: f64,
        lambda: f64,
        shift: f64,
    },

    #[error("residual {residual:e} exceeds tol*anorm = {threshold:e}")]
    ResidualContract { residual: f64, threshold: f64 },

    #[error("eigenvector norm {norm} deviates from 1 by more than 1e-12")]
    NotNormalized { norm: f64 },

    #[error(
        "no convergence after {restarts} restarts (best Ritz value {best_lambda:e}, residual {best_residual:e})"
    )]
    NotConverged {
        restarts: usize,
        best_lambda: f64,
        best_residual: f64,
    },

    #[error("basis orthonormality lost: ||B^T B - I||_F = {0:e}")]
    OrthogonalityLost(f64),

    #[error("eigenvector block is numerically rank deficient")]
    RankDeficient,

    #[error("matrix Gamma_i is singular at index {index}")]
    SingularGamma { index: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dimension {n} exceeds the dense oracle cap {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("LDL^T factorization broke down at pivot {index}")]
    Breakdown { index: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl EedError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        EedError::Parse {
            line,
            message: message.into(),
        }
    }
}

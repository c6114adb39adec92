use thiserror::Error;

/// Errors raised by the operator calculus.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: {0}")]
    NotHermitian(String),

    #[error("not a Gram matrix: smallest eigenvalue {min:e} is below {threshold:e}")]
    NotGram { min: f64, threshold: f64 },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("not square integrable: {0}")]
    NotSquareIntegrable(String),

    #[error("series does not converge: {0}")]
    Divergent(String),

    #[error("requested accuracy {requested:e} not reached, best certified bound {achieved:e}")]
    AccuracyUnreachable { requested: f64, achieved: f64 },

    #[error("domain violation in {op}: {detail}")]
    DomainViolation { op: &'static str, detail: String },

    #[error("span families belong to different models")]
    ModelMismatch,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("condition violated: {0}")]
    ConditionViolated(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::DomainViolation {
            op,
            detail: detail.into(),
        }
    }
}

use thiserror::Error;

/// Errors raised by the numerical kernels, models and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular (minimum eigenvalue {min_eigenvalue:e} at or below tolerance)")]
    SingularMatrix { min_eigenvalue: f64 },
    #[error("matrix is not positive semidefinite (minimum eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    Asymmetric { asymmetry: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("time must be positive, got {0}")]
    NonpositiveTime(f64),
    #[error("parameter `{name}` must be positive, got {value}")]
    NonpositiveParameter { name: &'static str, value: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("at least {required} samples required, got {got}")]
    InsufficientSamples { required: usize, got: usize },
    #[error("at least {required} levels required, got {got}")]
    InsufficientLevels { required: usize, got: usize },
    #[error("invalid grid level: {0}")]
    InvalidLevel(String),
    #[error("incompatible levels: fine level {fine} vs coarse level {coarse}")]
    IncompatibleLevels { fine: usize, coarse: usize },
    #[error("no closed-form transition law: {0}")]
    NoClosedForm(String),
    #[error("no analytic route for pair ({0})")]
    NoAnalyticRoute(String),
    #[error("transform `{transform}` is not supported for {family}")]
    UnsupportedTransform { transform: String, family: String },
    #[error("empty list")]
    EmptyList,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    /// True for errors that say an operation has no defined meaning for the
    /// given input (as opposed to a numerical or configuration failure).
    pub fn is_unsupported(&self) -> bool {
        matches!(
            self,
            Error::NoClosedForm(_)
                | Error::NoAnalyticRoute(_)
                | Error::UnsupportedTransform { .. }
                | Error::InsufficientLevels { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

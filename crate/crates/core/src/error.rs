use thiserror::Error;

/// Errors produced by the coexistence library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eig:e} (lambda_max {max_eig:e})")]
    NotPsd { min_eig: f64, max_eig: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        /// Best iterate found before giving up.
        best: Option<crate::CMat>,
    },

    #[error("numerical rank deficiency: {0}")]
    NumericalRank(String),

    #[error("saddle-point search failed: {0}")]
    SaddleFailure(String),

    #[error("estimation failed: {0}")]
    EstimationFailure(String),

    #[error("invalid thresholds: gamma {gamma} must not exceed eta {eta} and both must be >= 0")]
    InvalidThresholds { gamma: f64, eta: f64 },

    #[error("unknown detector `{0}`")]
    UnknownDetector(String),

    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of a numerical routine (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPsd { .. }
                | Error::Convergence { .. }
                | Error::NumericalRank(_)
                | Error::SaddleFailure(_)
                | Error::EstimationFailure(_)
                | Error::Internal(_)
        )
    }

    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("matrix is not Hermitian (max |M - M^dagger| = {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix does not have unit trace (trace = {trace:.12})")]
    NotUnitTrace { trace: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue = {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("matrix is not unitary (max |U^dagger U - I| = {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("state vector is not normalized (norm = {norm:.12})")]
    NotNormalized { norm: f64 },

    #[error("channel is not trace preserving (max |sum K^dagger K - I| = {residual:.3e})")]
    NotTracePreserving { residual: f64 },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{name} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("observable must have eigenvalues +1/-1 (max |O^2 - I| = {residual:.3e})")]
    InvalidObservable { residual: f64 },

    #[error("outcome probability {0} lies outside [0, 1]")]
    InvalidProbability(f64),

    #[error("at least one shot is required")]
    ZeroShots,

    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}

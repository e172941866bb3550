use thiserror::Error;

/// Errors produced by the model, discretization and dataset layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quantity that must be nonzero for the operation vanished.
    #[error("singularity: {0}")]
    Singularity(String),

    /// A simulation drove the state outside the physically valid region.
    #[error("simulation left the physical domain at step {step}: {reason}")]
    OutOfDomain { step: usize, reason: String },

    /// A matrix or series contains NaN or infinite entries.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid signal spec: {0}")]
    Signal(String),

    /// Amplitude calibration could not bracket or reach the target.
    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] spme_core::Error),

    #[error("invalid input: {0}")]
    Invalid(String),

    /// Root finding or optimization could not proceed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Optimizer hit its iteration cap; carries the best point seen.
    #[error("optimizer did not converge within {iterations} iterations (best objective {best_objective})")]
    NoConvergence {
        iterations: usize,
        best_objective: f64,
        best_point: Vec<f64>,
    },

    /// The Fisher information matrix is numerically singular; carries the
    /// direction along which the data carry no information.
    #[error("parameters not identifiable: FIM condition number {condition:.3e}, null direction {null_direction:?}")]
    NonIdentifiable {
        condition: f64,
        null_direction: Vec<f64>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

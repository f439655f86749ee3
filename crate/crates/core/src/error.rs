//! Crate-wide error type.

/// Errors produced by grid construction, assembly, linear solves and the
/// time-stepping loop.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    CgDidNotConverge { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite (p'Ap = {curvature:.3e} at iteration {iteration})")]
    NotPositiveDefinite { iteration: usize, curvature: f64 },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("degenerate cell {cell} (signed volume {volume:.3e})")]
    DegenerateCell { cell: usize, volume: f64 },

    #[error("linear solve failed at time step {step}: {source}")]
    StepSolve {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("solution blew up at time step {step} (non-finite values)")]
    BlowUp { step: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

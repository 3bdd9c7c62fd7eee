use dbvp_core::{ConditionError, SpectrumError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid geometry parameter: {0}")]
    InvalidParameter(String),
    #[error("geometry has no compact boundary")]
    NoCompactBoundary,
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("grid with {0} nodes is too coarse (need at least 16)")]
    GridTooCoarse(usize),
    #[error("interval length {0} is not positive and finite")]
    BadInterval(f64),
    #[error("boundary condition couples mode {mode} to coordinates no mode traces")]
    MissingBlock { mode: u32 },
    #[error("condition on modes {modes:?} is not selfadjoint; eigenvalues need a selfadjoint problem")]
    NotSelfadjoint { modes: Vec<u32> },
    #[error("Gram matrix of the constrained space is singular on modes {modes:?}")]
    Singular { modes: Vec<u32> },
    #[error("eigenvalue {value} moved by {change:.3e} under refinement (tolerance {tol:.1e})")]
    Convergence { value: f64, change: f64, tol: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Condition(#[from] ConditionError),
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("tail policy inapplicable: {0}; increase the cutoff")]
    TailPolicy(String),
    #[error("index check precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Condition(#[from] ConditionError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

//! Mode reductions of model geometries, a spectral solver for the resulting
//! boundary value problems on an interval, and index checks built on it.

pub mod error;
pub mod exec;
pub mod geometry;
pub mod grid;
pub mod identities;
pub mod index;
pub mod periodic;
pub mod problem;
pub mod solver;

pub use error::{GeometryError, IndexError, SolverError};
pub use exec::{init_threads_from_env, Exec};
pub use geometry::{Geometry, ModeFamily, MultTable, Shape};
pub use grid::Grid;
pub use index::{numeric_index, CheckEntry, IndexReport};
pub use problem::ModeProblem;
pub use solver::{spectrum, SolverOptions, SpectralResult};

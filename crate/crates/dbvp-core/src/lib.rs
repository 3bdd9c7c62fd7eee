//! Truncated boundary spectra of adapted boundary operators and the
//! elliptic boundary conditions built over them.

pub mod condition;
pub mod error;
pub mod linalg;
pub mod spectrum;

pub use condition::{
    BcRecipe, BoundaryCondition, ConditionTag, EllipticDecomposition, EllipticityReport,
    NormalForm,
};
pub use error::{ConditionError, SpectrumError};
pub use spectrum::{
    BoundaryCoeffs, BoundarySpectrum, Chirality, EigenLine, HybridKind, Interval, SigmaAction,
    SigmaPair,
};

//! Driver behind the `dbvp` binary: experiment configs, runs and the
//! artifacts they write.

pub mod config;
pub mod error;
pub mod render;
pub mod run;

pub use config::{ExperimentConfig, Overrides};
pub use error::CliError;
pub use run::{Manifest, Outcome, SpectrumDoc};

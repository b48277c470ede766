//! Experiment runner for generalized iteratively regularized Landweber
//! iterations: dataset and image file formats, JSON configuration, preset
//! experiments and artifact output. The numerics live in [`girli_core`].

// Negated comparisons are the NaN-rejecting form of range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod output;
pub mod presets;
pub mod runner;

pub use config::ExperimentConfig;
pub use error::{Result, RunError};
pub use girli_core;
pub use output::emit_outputs;
pub use runner::{run_experiment, Experiment, RunRecord};

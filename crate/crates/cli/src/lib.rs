//! Experiment harness around `nested-tom-core`: dataset files, network
//! training, inference dumps, evaluation tables and reports.

pub mod cases;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod infer;
pub mod eval;
pub mod io;
pub mod manifest;
pub mod report;
pub mod train;

pub use config::ExperimentConfig;
pub use data::Env;
pub use error::{CliError, Result};

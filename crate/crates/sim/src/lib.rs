//! Command-line runner for `atris-core`: configuration files, study
//! execution with a thread pool, and the CSV, surface-program and
//! matrix-dump formats.

pub mod config;
pub mod output;
pub mod run;

pub use config::{ConfigError, RunConfig};
pub use run::{execute, RunSummary};

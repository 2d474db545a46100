//! Scenario-driven entry point for the engines: configuration parsing,
//! dispatch, invariant monitoring, and artifact output.

pub mod config;
pub mod runner;

pub use config::Format;
pub use runner::{run_file, validate_file, CliError, RunArgs};

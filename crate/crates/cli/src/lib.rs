//! Experiment harness behind the `qgan` binary: TOML configuration,
//! counter-based seeding, parallel sweep runners and CSV output.

pub mod app;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod seeds;

pub use error::CliError;

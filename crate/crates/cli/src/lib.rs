//! Orchestration behind the `arfault` command-line tool.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod manifest;
pub mod report;

pub use config::{EndMode, PipelineConfig};
pub use error::{CliError, CliResult};

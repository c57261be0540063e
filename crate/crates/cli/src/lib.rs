//! Command-line front end for the identification toolkit: configuration
//! parsing, dataset ingestion and generation, and report serialization.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod report;

pub use error::{CliError, Result};

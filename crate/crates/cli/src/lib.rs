//! Library side of the `galqr` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod preprocess;
pub mod summary;
pub mod synth;

pub use error::{CliError, Result};

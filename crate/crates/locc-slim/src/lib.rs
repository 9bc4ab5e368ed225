//! File formats, run reports and subcommands for the `locc-slim` tool.
//!
//! The algorithms live in `locc-core`; this crate adds JSON input and output,
//! reports with input digests, built-in demos and parallel evaluation.

pub mod commands;
pub mod demo;
mod error;
pub mod format;
pub mod report;

pub use error::{CliError, ErrorObject};

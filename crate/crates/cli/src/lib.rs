//! Library half of the `whkae` command-line tool.

pub mod commands;
pub mod config;

pub use commands::Report;
pub use config::{OutFormat, RunConfig};

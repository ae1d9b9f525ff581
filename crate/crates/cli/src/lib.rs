//! Command-line front end for the observer toolkit.

pub mod args;
pub mod commands;
pub mod document;

pub use args::Cli;
pub use commands::{run, CliError};
pub use document::DesignDocument;

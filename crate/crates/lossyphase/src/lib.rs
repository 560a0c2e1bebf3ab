//! File formats and commands behind the `lossyphase` binary.
//!
//! Every command writes CSV tables with a fixed schema (numbers in `%.12g`
//! style, LF line endings) and a JSON manifest from which the run can be
//! replayed bit for bit.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod manifest;
pub mod tables;

pub use error::{CliError, CliResult};

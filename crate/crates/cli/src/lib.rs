//! Library side of the `ebic` binary: config parsing, table emission,
//! matrix input and the numerical self-checks.

pub mod commands;
pub mod config;
pub mod error;
pub mod matrix;
pub mod table;
pub mod verify;

pub use error::{CliError, CliResult};
pub use table::{emit_table, format_cell, read_summaries, write_summaries, TableFormat};

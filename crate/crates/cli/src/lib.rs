//! Command-line surface for the pseudobox toolkit.
//!
//! Every subcommand is a thin wrapper over library calls: `eval`, `filter`,
//! `export`, `simulate` and `compare` mirror the pipeline stages, and `replay`
//! re-runs a recorded [`manifest::RunManifest`] and checks its output digests.

pub mod commands;
pub mod manifest;
pub mod table;

pub use commands::{run, Cli, CliError};
pub use manifest::RunManifest;
pub use table::{render_table, TableError};

//! Command-line front end: market-data ingestion, curve bootstrapping,
//! pricing and martingale diagnostics with machine-readable reports.

pub mod commands;
pub mod config;
pub mod error;
pub mod instruments;
pub mod market;
mod table;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult};

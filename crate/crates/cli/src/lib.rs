//! Library side of the `epiassim` command-line tool: CSV ingestion, synthetic
//! series, the sequential run with its artifacts, and forecast scoring.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod io;
pub mod plot;
pub mod run;
pub mod score;
pub mod simulate;

pub use error::{CliError, Result};

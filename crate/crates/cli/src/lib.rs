//! Configuration, single-point reports and parameter sweeps for the
//! `femtoflow` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod sweep;

pub use commands::{capacity_report, simulate_report, solve_report};
pub use config::{Axis, Config, Overrides, SweepSection};
pub use error::CliError;
pub use sweep::{sweep_csv, SCHEMA_LINE};

//! Scenario files, batch runs, sweeps and data export for the
//! `adaptive-consensus` simulator.

pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;
pub mod sweep;

pub use error::CliError;
pub use scenario::{load_scenario, ScenarioFile};

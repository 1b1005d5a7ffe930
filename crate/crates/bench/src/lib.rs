//! Benchmark scenarios, exact solutions and report writers for the
//! lattice Boltzmann transport solvers in `lbm-core`.

pub mod catalog;
pub mod config;
pub mod error;
pub mod oracle;
pub mod output;
pub mod runner;

pub use catalog::{scenario, scenario_catalog, Case, Scenario, ScenarioId};
pub use error::BenchError;
pub use runner::{run, RunOutput, RunRequest};

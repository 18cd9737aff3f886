//! Scenario runner for the `kjlab-core` laboratory.
//!
//! A scenario is a JSON file naming a grid, a twist form, a seed and one
//! task. Running it writes `summary.json`, plot-ready CSV tables and field
//! snapshots into an output directory.

pub mod error;
pub mod report;
pub mod scenario;
pub mod suite;
pub mod tasks;

pub use error::{CliError, Result};
pub use report::{Row, Summary};
pub use scenario::{Scenario, TaskKind};
pub use tasks::run_scenario;

#[cfg(test)]
#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

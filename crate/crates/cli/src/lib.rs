//! Scenario runner: JSON scenario files in, deterministic JSON reports out.

pub mod error;
pub mod json;
pub mod report;
pub mod runner;
pub mod scenario;

pub use error::{CliError, CliResult};
pub use report::{emit_distribution_table, Body, Check, Report, Verdict};
pub use runner::{run_body, run_path, run_scenario, scenario_files};
pub use scenario::{Kind, Scenario};

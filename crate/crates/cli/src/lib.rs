//! Scenario runner for the radial mass equation solvers: flat TOML in, CSV
//! and `metadata.txt` out.

pub mod config;
pub mod output;
pub mod scenarios;

pub use config::{parse_config, parse_config_for, DataSpec, ScenarioConfig, ScenarioKind};
pub use scenarios::{run_scenario, Verdict};

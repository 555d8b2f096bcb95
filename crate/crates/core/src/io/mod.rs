//! Scenario files and report output.

mod report;
mod scenario;

pub use report::{
    atomic_write, csv_float, csv_table, scenario_hash, CheckEntry, Report, SCHEMA, TOOL,
};
pub use scenario::{parse_scenario, KEYS, S1};

use crate::error::Result;
use crate::model::Scenario;
use std::path::Path;

pub fn load_scenario(path: &Path, overrides: &[String]) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text, overrides)
}

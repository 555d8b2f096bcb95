use crate::error::{Error, Result};
use crate::model::Scenario;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const SCHEMA: u32 = 1;
pub const TOOL: &str = "equiscreen";

/// One line of a report: `{check, pass, value, tolerance, witness}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub check: String,
    pub pass: bool,
    /// Non-finite values serialise as `null`.
    pub value: f64,
    pub tolerance: Option<f64>,
    pub witness: Value,
}

impl CheckEntry {
    pub fn new(
        check: &str,
        pass: bool,
        value: f64,
        tolerance: Option<f64>,
        witness: impl Serialize,
    ) -> Self {
        CheckEntry {
            check: check.to_string(),
            pass,
            value,
            tolerance,
            witness: serde_json::to_value(witness).unwrap_or(Value::Null),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario_hash: String,
    pub command: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<CheckEntry>,
    pub details: Value,
}

impl Report {
    pub fn new(command: &str, scenario: &Scenario, seed: u64) -> Self {
        Report {
            schema: SCHEMA,
            tool: TOOL,
            version: crate::VERSION,
            scenario_hash: scenario_hash(scenario),
            command: command.to_string(),
            seed,
            pass: true,
            checks: Vec::new(),
            details: Value::Null,
        }
    }

    pub fn push(&mut self, c: CheckEntry) {
        self.pass &= c.pass;
        self.checks.push(c);
    }

    pub fn set_details(&mut self, d: impl Serialize) {
        self.details = serde_json::to_value(d).unwrap_or(Value::Null);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn checks_csv(&self) -> String {
        let mut out = String::from("check,pass,value,tolerance\n");
        for c in &self.checks {
            let tol = c.tolerance.map(csv_float).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", c.check, c.pass, csv_float(c.value), tol);
        }
        out
    }
}

/// SHA-256 of the scenario's canonical JSON form (after overrides).
pub fn scenario_hash(s: &Scenario) -> String {
    let canon = serde_json::to_string(s).expect("scenario serialises");
    let digest = Sha256::digest(canon.as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut h, b| {
        let _ = write!(h, "{b:02x}");
        h
    })
}

/// Shortest round-trip decimal; `inf`, `-inf`, `NaN` for non-finite values.
pub fn csv_float(v: f64) -> String {
    format!("{v:?}")
}

/// A numeric table with a header row.
pub fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|&v| csv_float(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes through a temporary sibling file and renames it into place.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::from(e)
    })
}

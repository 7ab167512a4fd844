//! Machine-readable run reports and the exit-code policy.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::curvature::KAdjudication;
use crate::exprdsl::RunConfig;

pub const SCHEMA_VERSION: &str = "1.0.0";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rejection rate above which a run counts as a numerical breakdown.
pub const MAX_REJECTION_RATE: f64 = 0.05;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BREAKDOWN: i32 = 3;

/// One row of a check table. `passed` is `samples > 0 && max <= tolerance`
/// and is recomputable from the other fields.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub samples: usize,
    pub max: f64,
    pub mean: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Derivative path: `jet`, `fd`, `closed-form` or `algebra`.
    pub path: String,
    /// Reported but excluded from the exit code.
    pub informational: bool,
}

impl CheckRow {
    pub fn new(name: &str, values: &[f64], tolerance: f64, path: &str) -> Self {
        let samples = values.len();
        let max = values.iter().fold(0.0_f64, |m, &v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) });
        let mean = if samples == 0 { 0.0 } else { values.iter().sum::<f64>() / samples as f64 };
        CheckRow {
            name: name.to_string(),
            samples,
            max,
            mean,
            tolerance,
            passed: samples > 0 && max <= tolerance,
            path: path.to_string(),
            informational: false,
        }
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub schema_version: String,
    pub tool_version: String,
    pub command: String,
    pub config: RunConfig,
    pub deta_convention: Option<String>,
    pub k_adjudication: Option<KAdjudication>,
    pub checks: Vec<CheckRow>,
    pub attempted: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub verdicts: BTreeMap<String, String>,
    pub findings: Vec<String>,
    /// Command-specific structured output (constants, fits, decompositions).
    pub data: BTreeMap<String, Value>,
    /// Wall-clock stamp; the only field that varies between identical runs.
    pub timestamp: Option<String>,
}

impl ResidualReport {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        ResidualReport {
            schema_version: SCHEMA_VERSION.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            config: config.clone(),
            deta_convention: None,
            k_adjudication: None,
            checks: Vec::new(),
            attempted: 0,
            accepted: 0,
            rejected: 0,
            verdicts: BTreeMap::new(),
            findings: Vec::new(),
            data: BTreeMap::new(),
            timestamp: None,
        }
    }

    pub fn push(&mut self, row: CheckRow) {
        self.checks.push(row);
    }

    pub fn check(&self, name: &str) -> Option<&CheckRow> {
        self.checks.iter().find(|r| r.name == name)
    }

    pub fn record<T: Serialize>(&mut self, key: &str, value: &T) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.data.insert(key.to_string(), v);
    }

    /// Adds sampling counts; repeated calls accumulate.
    pub fn count(&mut self, attempted: usize, accepted: usize) {
        self.attempted += attempted;
        self.accepted += accepted;
        self.rejected += attempted - accepted;
    }

    pub fn rejection_rate(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.rejected as f64 / self.attempted as f64
        }
    }

    pub fn failed_checks(&self) -> Vec<&CheckRow> {
        self.checks.iter().filter(|r| !r.informational && !r.passed).collect()
    }

    pub fn exit_code(&self) -> i32 {
        if self.rejection_rate() > MAX_REJECTION_RATE {
            EXIT_BREAKDOWN
        } else if self.failed_checks().is_empty() {
            EXIT_PASS
        } else {
            EXIT_CHECK_FAILED
        }
    }

    /// JSON with the timestamp removed; identical for identical config and seed.
    pub fn deterministic_json(&self) -> String {
        let mut copy = self.clone();
        copy.timestamp = None;
        serde_json::to_string_pretty(&copy).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} (m = {}, f = {}, level = {})", self.command, self.config.m, self.config.f, self.config.level);
        if let Some(d) = &self.deta_convention {
            let _ = writeln!(out, "d\u{3b7} convention: {d}");
        }
        if let Some(k) = &self.k_adjudication {
            let _ = writeln!(
                out,
                "k: measured {}, branch {}, k_used {:.9}, l_used {:.9}",
                k.measured_k.map_or("undefined".to_string(), |v| format!("{v:.9}")),
                k.matched_branch,
                k.k_used,
                k.l_used
            );
        }
        let width = self.checks.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
        let _ = writeln!(
            out,
            "{:<width$}  {:>7}  {:>11}  {:>11}  {:>9}  {:<11}  result",
            "check", "samples", "max", "mean", "tol", "path"
        );
        for r in &self.checks {
            let result = match (r.passed, r.informational) {
                (true, false) => "pass",
                (false, false) => "FAIL",
                (true, true) => "info",
                (false, true) => "info (above tol)",
            };
            let _ = writeln!(
                out,
                "{:<width$}  {:>7}  {:>11.3e}  {:>11.3e}  {:>9.1e}  {:<11}  {result}",
                r.name, r.samples, r.max, r.mean, r.tolerance, r.path
            );
        }
        let _ = writeln!(out, "samples: {} attempted, {} accepted, {} rejected", self.attempted, self.accepted, self.rejected);
        for (k, v) in &self.verdicts {
            let _ = writeln!(out, "verdict {k}: {v}");
        }
        for f in &self.findings {
            let _ = writeln!(out, "finding: {f}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> RunConfig {
        RunConfig::from_json_str(r#"{"m": 1, "f": "x + z", "level": 0}"#).unwrap()
    }

    #[test]
    fn row_pass_logic() {
        assert!(CheckRow::new("a", &[1e-9, 2e-9], 1e-8, "jet").passed);
        assert!(!CheckRow::new("a", &[1e-9, 2e-7], 1e-8, "jet").passed);
        assert!(!CheckRow::new("a", &[], 1e-8, "jet").passed);
        assert!(!CheckRow::new("a", &[f64::NAN, 0.0], 1.0, "jet").passed);
    }

    #[test]
    fn exit_codes() {
        let mut r = ResidualReport::new("axioms", &config());
        r.push(CheckRow::new("ok", &[0.0], 1.0, "jet"));
        r.count(100, 100);
        assert_eq!(r.exit_code(), EXIT_PASS);
        r.push(CheckRow::new("above", &[2.0], 1.0, "jet").informational());
        assert_eq!(r.exit_code(), EXIT_PASS);
        r.push(CheckRow::new("bad", &[2.0], 1.0, "jet"));
        assert_eq!(r.exit_code(), EXIT_CHECK_FAILED);
        r.count(10, 0);
        assert_eq!(r.exit_code(), EXIT_BREAKDOWN);
    }

    #[test]
    fn timestamp_is_excluded() {
        let mut a = ResidualReport::new("surface", &config());
        let b = a.clone();
        a.timestamp = Some("later".into());
        assert_eq!(a.deterministic_json(), b.deterministic_json());
        assert!(a.to_json().contains("later"));
    }
}

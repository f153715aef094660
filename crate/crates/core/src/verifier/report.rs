use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Calibration, Conventions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Recorded without a claim (hypothesis not met, heuristic κ, ...).
    Info,
}

impl Status {
    pub fn from_bool(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
        }
    }
}

/// One row of a report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckRecord {
    pub check_id: String,
    pub kind: String,
    pub model: String,
    pub form: String,
    pub grid: Option<usize>,
    pub lhs: Option<f64>,
    pub rhs1: Option<f64>,
    pub rhs2: Option<f64>,
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub status: Status,
    #[serde(default)]
    pub detail: serde_json::Value,
}

impl CheckRecord {
    pub fn new(check_id: &str, kind: &str, model: &str, form: &str) -> CheckRecord {
        CheckRecord {
            check_id: check_id.to_string(),
            kind: kind.to_string(),
            model: model.to_string(),
            form: form.to_string(),
            grid: None,
            lhs: None,
            rhs1: None,
            rhs2: None,
            residual: None,
            tolerance: 0.0,
            status: Status::Info,
            detail: serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub manifest: Option<String>,
    /// FNV-1a of the manifest bytes, hex.
    pub manifest_hash: Option<String>,
    pub seed: u64,
    pub threads: usize,
    pub conventions: Conventions,
    pub calibration: Option<Calibration>,
}

impl Provenance {
    pub fn new(command: &str, seed: u64, threads: usize, conventions: Conventions) -> Provenance {
        Provenance {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            manifest: None,
            manifest_hash: None,
            seed,
            threads,
            conventions,
            calibration: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub info: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub provenance: Provenance,
    pub summary: Summary,
    pub checks: Vec<CheckRecord>,
}

pub const CSV_HEADER: [&str; 9] = ["check_id", "model", "form", "N", "lhs", "rhs1", "rhs2", "residual", "status"];

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl Report {
    pub fn new(provenance: Provenance, checks: Vec<CheckRecord>) -> Report {
        let count = |s| checks.iter().filter(|c| c.status == s).count();
        let summary = Summary { passed: count(Status::Pass), failed: count(Status::Fail), info: count(Status::Info) };
        Report { provenance, summary, checks }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Report> {
        serde_json::from_str(text).map_err(|e| Error::Manifest { context: "report.json".into(), message: e.to_string() })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for c in &self.checks {
            w.write_record([
                c.check_id.clone(),
                c.model.clone(),
                c.form.clone(),
                c.grid.map(|g| g.to_string()).unwrap_or_default(),
                num(c.lhs),
                num(c.rhs1),
                num(c.rhs2),
                num(c.residual),
                c.status.as_str().to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 fields")
    }

    /// Write `report.json` and `report.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())?;
        std::fs::write(dir.join("report.csv"), self.to_csv())?;
        Ok(())
    }

    /// One line per check, for terminals.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out += &format!(
                "{:<5} {:<28} {:<16} residual={}\n",
                c.status.as_str(),
                c.check_id,
                c.model,
                c.residual.map(|r| format!("{r:.3e}")).unwrap_or_else(|| "-".into())
            );
        }
        out += &format!(
            "{} passed, {} failed, {} informational\n",
            self.summary.passed, self.summary.failed, self.summary.info
        );
        out
    }
}

/// FNV-1a, hex.
pub fn fingerprint(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

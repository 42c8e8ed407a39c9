use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::fit::ExponentFit;

/// One CSV/JSON cell. Non-finite floats become `Missing` so that the JSON
/// form round-trips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Missing,
}

impl Cell {
    pub fn float(x: f64) -> Self {
        if x.is_finite() {
            Self::Float(x)
        } else {
            Self::Missing
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Self::Int(i) => Some(i as f64),
            Self::Float(x) => Some(x),
            Self::Missing => None,
        }
    }

    fn write_csv(&self, out: &mut String) {
        match self {
            Self::Int(i) => write!(out, "{i}").unwrap(),
            Self::Float(x) => write!(out, "{x:.16e}").unwrap(),
            Self::Missing => {}
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Self::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::float(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k].as_f64()).collect())
    }

    /// Header row, comma separated, `{:.16e}` floats, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (k, cell) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                cell.write_csv(&mut out);
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if passed {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            detail: detail.into(),
        }
    }

    pub fn skipped(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::Skipped,
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub label: String,
    pub n: usize,
    pub excluded: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub tool: String,
    pub tool_version: String,
    pub experiment: ExperimentKind,
    pub master_seed: u64,
    pub config: ExperimentConfig,
    pub tables: Vec<Table>,
    pub fits: Vec<ExponentFit>,
    pub checks: Vec<Check>,
    pub excluded_replicas: Vec<Exclusion>,
    pub wall_clock_seconds: f64,
    /// Sampling time attributable to the replicas used, including replicas
    /// served from a cache filled by an earlier run.
    pub sampling_seconds: f64,
    /// Time this run spent obtaining replicas, whether sampling them or
    /// waiting on a concurrent run sampling the same ensemble.
    pub fresh_sampling_seconds: f64,
}

impl ExperimentReport {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn fit(&self, name: &str) -> Option<&ExponentFit> {
        self.fits.iter().find(|f| f.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    /// Wall clock with replica acquisition replaced by attributed sampling
    /// time, so the figure does not depend on what the cache held.
    pub fn effective_seconds(&self) -> f64 {
        self.wall_clock_seconds - self.fresh_sampling_seconds + self.sampling_seconds
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Writes `<table>.csv` for each table and `<kind>_report.json` into
    /// `dir`, returning the paths written.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.tables.len() + 1);
        for table in &self.tables {
            let path = dir.join(format!("{}.csv", table.name));
            std::fs::write(&path, table.to_csv())?;
            written.push(path);
        }
        let path = dir.join(format!("{}_report.json", self.experiment));
        std::fs::write(&path, self.to_json())?;
        written.push(path);
        Ok(written)
    }
}

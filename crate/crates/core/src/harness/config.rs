use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensembles::{EntryKind, MIN_AUDIT_SAMPLES};
use crate::interlace::MIN_INTERLACE_REPLICAS;
use crate::spectral_stats::{MIN_PROFILE_REPLICAS, MIN_STATISTICS_REPLICAS};

pub const MIN_TRACE_REPLICAS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    VarianceScan,
    EdgeScan,
    IntermediateScan,
    CountingScan,
    InterlaceCheck,
    W2Scan,
    Locations,
    MomentAudit,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        Self::VarianceScan,
        Self::EdgeScan,
        Self::IntermediateScan,
        Self::CountingScan,
        Self::InterlaceCheck,
        Self::W2Scan,
        Self::Locations,
        Self::MomentAudit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::VarianceScan => "variance_scan",
            Self::EdgeScan => "edge_scan",
            Self::IntermediateScan => "intermediate_scan",
            Self::CountingScan => "counting_scan",
            Self::InterlaceCheck => "interlace_check",
            Self::W2Scan => "w2_scan",
            Self::Locations => "locations",
            Self::MomentAudit => "moment_audit",
        }
    }

    fn min_replicas(self) -> usize {
        match self {
            Self::VarianceScan | Self::EdgeScan | Self::IntermediateScan | Self::W2Scan => {
                MIN_STATISTICS_REPLICAS
            }
            Self::CountingScan => MIN_PROFILE_REPLICAS,
            Self::InterlaceCheck => MIN_INTERLACE_REPLICAS,
            Self::MomentAudit => MIN_TRACE_REPLICAS,
            Self::Locations => 1,
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("config field `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

fn default_ratio() -> f64 {
    2.0
}

fn default_entry() -> EntryKind {
    EntryKind::GaussianComplex
}

fn default_replicas() -> usize {
    2000
}

fn default_k() -> f64 {
    1.0
}

fn default_samples() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// May be left out when the kind is given on the command line.
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    pub n_list: Vec<usize>,
    /// `m / n`; `m = round(ratio · n)`.
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default = "default_entry")]
    pub entry_kind: EntryKind,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Output directory for CSV files and the JSON report.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Threshold grid overriding the bulk grid of counting and interlace runs.
    #[serde(default)]
    pub thresholds: Option<Vec<f64>>,
    /// Eigenvalue index overriding the scan's canonical index, for every n.
    #[serde(default)]
    pub index: Option<usize>,
    /// `K` in the intermediate window `n - j ≥ K log n`.
    #[serde(default = "default_k")]
    pub intermediate_k: f64,
    /// Entry draws for the moment audit.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl ExperimentConfig {
    /// A config with defaults for everything but the kind and n list.
    pub fn new(experiment: ExperimentKind, n_list: Vec<usize>) -> Self {
        Self {
            experiment: Some(experiment),
            n_list,
            ratio: default_ratio(),
            entry_kind: default_entry(),
            replicas: default_replicas(),
            master_seed: 0,
            output: None,
            thresholds: None,
            index: None,
            intermediate_k: default_k(),
            samples: default_samples(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let field = msg
                .split_once("field `")
                .and_then(|(_, rest)| rest.split_once('`'))
                .map(|(f, _)| f.to_string())
                .unwrap_or_else(|| "<json>".to_string());
            ConfigError::new(field, msg)
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("<file>", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn kind(&self) -> Result<ExperimentKind, ConfigError> {
        self.experiment
            .ok_or_else(|| ConfigError::new("experiment", "no experiment kind given"))
    }

    /// Canonical index of the scan at size `n`.
    pub fn index_for(&self, kind: ExperimentKind, n: usize) -> usize {
        if let Some(j) = self.index {
            return j;
        }
        match kind {
            ExperimentKind::EdgeScan => n,
            ExperimentKind::IntermediateScan => n - (n as f64).powf(2.0 / 3.0).ceil() as usize,
            _ => (n / 2).max(1),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let kind = self.kind()?;
        if self.n_list.is_empty() {
            return Err(ConfigError::new("n_list", "must not be empty"));
        }
        if self.n_list.contains(&0) {
            return Err(ConfigError::new("n_list", "sizes must be positive"));
        }
        if !self.n_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(ConfigError::new("n_list", "must be strictly ascending"));
        }
        if !(self.ratio.is_finite() && self.ratio >= 1.0) {
            return Err(ConfigError::new(
                "ratio",
                format!("must be >= 1, got {}", self.ratio),
            ));
        }
        let needed = kind.min_replicas();
        if self.replicas < needed {
            return Err(ConfigError::new(
                "replicas",
                format!("{kind} needs at least {needed}, got {}", self.replicas),
            ));
        }
        if let Some(grid) = &self.thresholds {
            if grid.is_empty() || grid.iter().any(|t| !t.is_finite()) {
                return Err(ConfigError::new(
                    "thresholds",
                    "must be a non-empty list of finite values",
                ));
            }
            if !grid.windows(2).all(|w| w[0] < w[1]) {
                return Err(ConfigError::new("thresholds", "must be strictly ascending"));
            }
        }
        if !(self.intermediate_k.is_finite() && self.intermediate_k > 0.0) {
            return Err(ConfigError::new("intermediate_k", "must be positive"));
        }
        if kind == ExperimentKind::MomentAudit && self.samples < MIN_AUDIT_SAMPLES {
            return Err(ConfigError::new(
                "samples",
                format!("needs at least {MIN_AUDIT_SAMPLES}, got {}", self.samples),
            ));
        }
        if kind == ExperimentKind::InterlaceCheck && self.n_list.iter().any(|&n| n < 2) {
            return Err(ConfigError::new("n_list", "interlace check needs n >= 2"));
        }
        let indexed = matches!(
            kind,
            ExperimentKind::VarianceScan
                | ExperimentKind::EdgeScan
                | ExperimentKind::IntermediateScan
        );
        if indexed {
            for &n in &self.n_list {
                if n < 2 {
                    return Err(ConfigError::new("n_list", "scans need n >= 2"));
                }
                let j = self.index_for(kind, n);
                if j == 0 || j > n {
                    return Err(ConfigError::new("index", format!("{j} outside 1..={n}")));
                }
                if kind == ExperimentKind::IntermediateScan {
                    let gap = (n - j) as f64;
                    if gap < 2.0 || gap < self.intermediate_k * (n as f64).ln() {
                        return Err(ConfigError::new(
                            "index",
                            format!(
                                "j={j} at n={n} is outside the intermediate window n-j >= K log n (K={})",
                                self.intermediate_k
                            ),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

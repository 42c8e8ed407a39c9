//! Experiment configuration, drivers and reports.

mod config;
mod fit;
mod report;
mod run;
mod trace;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind, MIN_TRACE_REPLICAS};
pub use fit::{fit_exponent, spread, ExponentFit, Z95};
pub use report::{Cell, Check, CheckStatus, Exclusion, ExperimentReport, Table};
pub use run::{
    run_experiment, Harness, HarnessError, ReplicaSet, MAX_EXCLUDED_FRACTION, Z_ALLOWANCE,
};
pub use trace::{trace_moment_check, TraceMomentCheck};

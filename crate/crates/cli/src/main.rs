use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use mp_spectra::harness::{CheckStatus, ConfigError, Harness, HarnessError};
use mp_spectra::{ExperimentConfig, ExperimentKind};

/// Monte Carlo experiments on covariance spectra.
#[derive(Parser)]
#[command(name = "mp-spectra", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[command(rename_all = "snake_case")]
enum Command {
    /// Bulk eigenvalue variance against n.
    VarianceScan(RunArgs),
    /// Largest eigenvalue variance against n.
    EdgeScan(RunArgs),
    /// Variance at j = n - ceil(n^(2/3)) against n.
    IntermediateScan(RunArgs),
    /// Counting function mean, variance and tails.
    CountingScan(RunArgs),
    /// Complex against averaged real counting functions.
    InterlaceCheck(RunArgs),
    /// Wasserstein distance to the limiting law.
    W2Scan(RunArgs),
    /// Classical locations as CSV, with their bound checks.
    Locations(RunArgs),
    /// Entry moments and the trace ceiling.
    MomentAudit(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Exit with status 3 when a check fails.
    #[arg(long)]
    assert: bool,
}

impl Command {
    fn split(self) -> (ExperimentKind, RunArgs) {
        match self {
            Self::VarianceScan(a) => (ExperimentKind::VarianceScan, a),
            Self::EdgeScan(a) => (ExperimentKind::EdgeScan, a),
            Self::IntermediateScan(a) => (ExperimentKind::IntermediateScan, a),
            Self::CountingScan(a) => (ExperimentKind::CountingScan, a),
            Self::InterlaceCheck(a) => (ExperimentKind::InterlaceCheck, a),
            Self::W2Scan(a) => (ExperimentKind::W2Scan, a),
            Self::Locations(a) => (ExperimentKind::Locations, a),
            Self::MomentAudit(a) => (ExperimentKind::MomentAudit, a),
        }
    }
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_CHECK: u8 = 3;

fn load(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, ConfigError> {
    let mut config = ExperimentConfig::from_path(&args.config)?;
    match config.experiment {
        Some(k) if k != kind => {
            return Err(ConfigError::new(
                "experiment",
                format!("config is for {k} but the subcommand is {kind}"),
            ))
        }
        _ => config.experiment = Some(kind),
    }
    if let Some(dir) = &args.out {
        config.output = Some(dir.clone());
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if args.threads == Some(0) {
        return Err(ConfigError::new("threads", "must be positive"));
    }
    Ok(config)
}

fn run(kind: ExperimentKind, args: RunArgs) -> anyhow::Result<u8> {
    let config = match load(kind, &args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return Ok(EXIT_CONFIG);
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = args.threads {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().context("building the worker pool")?;
    let report = match pool.install(|| Harness::new().run(&config)) {
        Ok(r) => r,
        Err(HarnessError::Config(e)) => {
            eprintln!("config error: {e}");
            return Ok(EXIT_CONFIG);
        }
        Err(e) => return Err(e.into()),
    };
    for check in &report.checks {
        let status = match check.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "SKIP",
        };
        eprintln!("{status} {}: {}", check.name, check.detail);
    }
    for fit in &report.fits {
        eprintln!(
            "fit {}: slope {:.4} [{:.4}, {:.4}]",
            fit.name, fit.slope, fit.ci_low, fit.ci_high
        );
    }
    match &config.output {
        Some(dir) => eprintln!(
            "wrote {} tables and the report to {}",
            report.tables.len(),
            dir.display()
        ),
        None => println!("{}", report.to_json()),
    }
    if args.assert && !report.all_passed() {
        return Ok(EXIT_CHECK);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();
    match run(kind, args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

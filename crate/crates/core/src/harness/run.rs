use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use super::config::{ConfigError, ExperimentConfig, ExperimentKind};
use super::fit::{fit_exponent, spread, ExponentFit};
use super::report::{Cell, Check, Exclusion, ExperimentReport, Table};
use super::trace::TraceMomentCheck;
use crate::distances::distance_row;
use crate::ensembles::{
    moment_audit, sample_replicas, EnsembleSpec, EntryKind, STREAM_MAIN, STREAM_PAIR,
};
use crate::error::Error;
use crate::interlace::{real_counting_deviation_from_spectra, InterlaceReport};
use crate::linalg::SpectrumSample;
use crate::mp_law::{cached_classical_locations, MpLaw};
use crate::spectral_stats::{
    bernstein_check, bulk_grid, deviation_table, CountingProfile, ReplicaStatistics, TailScale,
};
use crate::summary::{mean, mean_stderr};

/// Allowed fraction of failed decompositions.
pub const MAX_EXCLUDED_FRACTION: f64 = 1e-3;
/// Monte Carlo allowance, in standard errors, of statistical checks.
pub const Z_ALLOWANCE: f64 = 3.0;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Compute(#[from] Error),
    #[error("writing outputs: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Default)]
struct Bank {
    samples: Vec<Option<SpectrumSample>>,
    seconds: f64,
}

/// Replicas `0..total` of one ensemble stream, failures excluded.
#[derive(Debug, Clone)]
pub struct ReplicaSet {
    pub spectra: Vec<SpectrumSample>,
    /// Replica index of each entry of `spectra`.
    pub indices: Vec<u64>,
    pub excluded: usize,
    pub total: usize,
    /// Sampling time attributable to these replicas.
    pub sampling_seconds: f64,
    /// Time this call spent obtaining the replicas, sampling or waiting.
    pub fresh_seconds: f64,
}

/// Runs experiments, caching replica spectra by `(spec, stream)` so that
/// experiments sharing an ensemble sample it once. A smaller request is
/// served from the prefix of a larger one, so results do not depend on what
/// ran before.
#[derive(Default)]
pub struct Harness {
    banks: Mutex<HashMap<(EnsembleSpec, u64), SharedBank>>,
}

type SharedBank = Arc<Mutex<Bank>>;

impl Harness {
    pub fn new() -> Self {
        Self::default()
    }

    /// A process-wide instance.
    pub fn shared() -> &'static Harness {
        static SHARED: OnceLock<Harness> = OnceLock::new();
        SHARED.get_or_init(Harness::new)
    }

    fn raw(
        &self,
        spec: &EnsembleSpec,
        stream: u64,
        count: usize,
    ) -> (Vec<Option<SpectrumSample>>, f64, f64) {
        // Waiting on a concurrent run that is filling the same bank counts as
        // time spent here, so it is not charged twice.
        let start = Instant::now();
        let bank = {
            let mut banks = self.banks.lock().unwrap();
            Arc::clone(banks.entry((*spec, stream)).or_default())
        };
        let mut bank = bank.lock().unwrap();
        if bank.samples.len() < count {
            let drawing = Instant::now();
            let have = bank.samples.len() as u64;
            let drawn = sample_replicas(spec, have..count as u64, stream);
            bank.samples.extend(drawn.into_iter().map(|r| r.ok()));
            bank.seconds += drawing.elapsed().as_secs_f64();
        }
        let attributed = bank.seconds * count as f64 / bank.samples.len().max(1) as f64;
        let samples = bank.samples[..count].to_vec();
        (samples, attributed, start.elapsed().as_secs_f64())
    }

    /// Replicas `0..count`, failing when more than
    /// [`MAX_EXCLUDED_FRACTION`] of them could not be decomposed.
    pub fn replicas(
        &self,
        spec: &EnsembleSpec,
        stream: u64,
        count: usize,
    ) -> Result<ReplicaSet, Error> {
        let (raw, sampling_seconds, fresh_seconds) = self.raw(spec, stream, count);
        let mut spectra = Vec::with_capacity(count);
        let mut indices = Vec::with_capacity(count);
        for (r, s) in raw.into_iter().enumerate() {
            if let Some(s) = s {
                spectra.push(s);
                indices.push(r as u64);
            }
        }
        let excluded = count - spectra.len();
        check_exclusions(excluded, count)?;
        Ok(ReplicaSet {
            spectra,
            indices,
            excluded,
            total: count,
            sampling_seconds,
            fresh_seconds,
        })
    }

    pub fn run(&self, config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
        config.validate()?;
        let kind = config.kind()?;
        let start = Instant::now();
        let mut ctx = RunContext {
            harness: self,
            config,
            tables: Vec::new(),
            fits: Vec::new(),
            checks: Vec::new(),
            exclusions: Vec::new(),
            sampling_seconds: 0.0,
            fresh_seconds: 0.0,
        };
        match kind {
            ExperimentKind::VarianceScan
            | ExperimentKind::EdgeScan
            | ExperimentKind::IntermediateScan => index_scan(&mut ctx, kind)?,
            ExperimentKind::CountingScan => counting_scan(&mut ctx)?,
            ExperimentKind::InterlaceCheck => interlace_scan(&mut ctx)?,
            ExperimentKind::W2Scan => w2_scan(&mut ctx)?,
            ExperimentKind::Locations => locations(&mut ctx)?,
            ExperimentKind::MomentAudit => audit(&mut ctx)?,
        }
        let report = ExperimentReport {
            tool: "mp-spectra".to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: kind,
            master_seed: config.master_seed,
            config: config.clone(),
            tables: ctx.tables,
            fits: ctx.fits,
            checks: ctx.checks,
            excluded_replicas: ctx.exclusions,
            wall_clock_seconds: start.elapsed().as_secs_f64(),
            sampling_seconds: ctx.sampling_seconds,
            fresh_sampling_seconds: ctx.fresh_seconds,
        };
        if let Some(dir) = &config.output {
            report.write_to(dir)?;
        }
        Ok(report)
    }
}

fn check_exclusions(excluded: usize, total: usize) -> Result<(), Error> {
    if excluded as f64 > MAX_EXCLUDED_FRACTION * total as f64 {
        return Err(Error::TooManyFailures {
            failed: excluded,
            total,
        });
    }
    Ok(())
}

/// Runs one experiment on a fresh cache, writing outputs when the config
/// names an output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    Harness::new().run(config)
}

struct RunContext<'a> {
    harness: &'a Harness,
    config: &'a ExperimentConfig,
    tables: Vec<Table>,
    fits: Vec<ExponentFit>,
    checks: Vec<Check>,
    exclusions: Vec<Exclusion>,
    sampling_seconds: f64,
    fresh_seconds: f64,
}

impl RunContext<'_> {
    fn spec(&self, n: usize, entry: EntryKind) -> Result<EnsembleSpec, Error> {
        EnsembleSpec::with_ratio(n, self.config.ratio, entry, self.config.master_seed)
    }

    fn replicas(
        &mut self,
        spec: &EnsembleSpec,
        stream: u64,
        label: &str,
    ) -> Result<ReplicaSet, Error> {
        let set = self.harness.replicas(spec, stream, self.config.replicas)?;
        self.note(&set, label, spec.n);
        Ok(set)
    }

    fn note(&mut self, set: &ReplicaSet, label: &str, n: usize) {
        self.sampling_seconds += set.sampling_seconds;
        self.fresh_seconds += set.fresh_seconds;
        self.exclusions.push(Exclusion {
            label: label.to_string(),
            n,
            excluded: set.excluded,
            total: set.total,
        });
    }

    /// Replica sets of several streams restricted to replicas that succeeded
    /// in all of them.
    fn aligned(
        &mut self,
        specs: &[(EnsembleSpec, u64, &str)],
    ) -> Result<Vec<Vec<SpectrumSample>>, Error> {
        let count = self.config.replicas;
        let mut raws = Vec::with_capacity(specs.len());
        for (spec, stream, label) in specs {
            let (raw, attributed, fresh) = self.harness.raw(spec, *stream, count);
            let failed = raw.iter().filter(|s| s.is_none()).count();
            let set = ReplicaSet {
                spectra: Vec::new(),
                indices: Vec::new(),
                excluded: failed,
                total: count,
                sampling_seconds: attributed,
                fresh_seconds: fresh,
            };
            self.note(&set, label, spec.n);
            raws.push(raw);
        }
        let keep: Vec<usize> = (0..count)
            .filter(|&r| raws.iter().all(|raw| raw[r].is_some()))
            .collect();
        check_exclusions(count - keep.len(), count)?;
        Ok(raws
            .into_iter()
            .map(|raw| keep.iter().map(|&r| raw[r].clone().unwrap()).collect())
            .collect())
    }

    fn fit(&mut self, name: &str, ns: &[f64], ys: &[f64], se: Option<&[f64]>) {
        if ns.len() >= 2 && ys.iter().all(|y| y.is_finite() && *y > 0.0) {
            if let Ok(fit) = fit_exponent(name, ns, ys, se) {
                self.fits.push(fit);
            }
        }
    }

    fn fit_slope(&self, name: &str) -> Option<f64> {
        self.fits.iter().find(|f| f.name == name).map(|f| f.slope)
    }

    fn multi_n(&self) -> bool {
        self.config.n_list.len() >= 2
    }
}

fn ln(x: usize) -> f64 {
    (x as f64).ln()
}

fn index_scan(ctx: &mut RunContext<'_>, kind: ExperimentKind) -> Result<(), Error> {
    let name = kind.name();
    let scale = match kind {
        ExperimentKind::VarianceScan => TailScale::Bulk,
        ExperimentKind::EdgeScan => TailScale::Edge,
        _ => TailScale::Intermediate,
    };
    let mut rows = Table::new(
        name,
        &[
            "n",
            "m",
            "j",
            "gamma_j",
            "mean_lambda",
            "var_lambda",
            "stderr_var",
            "second_moment",
            "normalized_var",
            "normalized_stderr",
            "replicas",
        ],
    );
    let mut tails = Table::new(
        format!("{name}_tails"),
        &["n", "j", "u", "threshold", "frequency", "stderr", "bound"],
    );
    let mut constants = Table::new(
        format!("{name}_deviation"),
        &["n", "j", "c", "c_prime", "log_factor", "log_tail_slope"],
    );
    let (mut ns, mut var, mut var_se, mut corrected, mut normalized) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &n in &ctx.config.n_list {
        let spec = ctx.spec(n, ctx.config.entry_kind)?;
        let law = spec.law();
        let j = ctx.config.index_for(kind, n);
        let set = ctx.replicas(&spec, STREAM_MAIN, "main")?;
        let grid = scale.default_u_grid();
        let stats = ReplicaStatistics::from_spectra(&law, &set.spectra, j, scale, &grid)?;
        let factor = match kind {
            ExperimentKind::VarianceScan => (n as f64).powi(2) / ln(n),
            ExperimentKind::EdgeScan => (n as f64).powf(4.0 / 3.0),
            _ => (n as f64).powf(4.0 / 3.0) * ((n - j) as f64).powf(2.0 / 3.0) / ln(n - j),
        };
        let log_correction = match kind {
            ExperimentKind::VarianceScan => ln(n),
            ExperimentKind::IntermediateScan => ln(n - j),
            _ => 1.0,
        };
        rows.push(vec![
            n.into(),
            spec.m.into(),
            j.into(),
            stats.gamma.into(),
            stats.mean_lambda.into(),
            stats.var_lambda.into(),
            stats.stderr_var.into(),
            stats.second_moment.into(),
            (stats.var_lambda * factor).into(),
            (stats.stderr_var * factor).into(),
            stats.replicas.into(),
        ]);
        let deviation = if scale == TailScale::Edge || j == n {
            None
        } else {
            Some(deviation_table(&law, &set.spectra, j, scale, &grid)?)
        };
        for (k, t) in stats.tail.iter().enumerate() {
            let bound = deviation
                .as_ref()
                .map_or(Cell::Missing, |d| d.rows[k].bound.into());
            tails.push(vec![
                n.into(),
                j.into(),
                t.u.into(),
                t.threshold.into(),
                t.frequency.into(),
                t.stderr.into(),
                bound,
            ]);
        }
        if let Some(d) = &deviation {
            constants.push(vec![
                n.into(),
                j.into(),
                d.c.into(),
                d.c_prime.into(),
                d.log_factor.into(),
                d.log_tail_slope().map_or(Cell::Missing, Cell::from),
            ]);
        }
        ns.push(n as f64);
        var.push(stats.var_lambda);
        var_se.push(stats.stderr_var);
        corrected.push(stats.var_lambda / log_correction);
        normalized.push(stats.var_lambda * factor);
    }
    ctx.tables.push(rows);
    ctx.tables.push(tails);
    if !constants.rows.is_empty() {
        ctx.tables.push(constants);
    }
    let corrected_se: Vec<f64> = var_se
        .iter()
        .zip(&var)
        .zip(&corrected)
        .map(|((s, v), c)| s * c / v)
        .collect();
    ctx.fit("raw_exponent", &ns, &var, Some(&var_se));
    if kind != ExperimentKind::EdgeScan {
        ctx.fit(
            "log_corrected_exponent",
            &ns,
            &corrected,
            Some(&corrected_se),
        );
    }

    let (spread_limit, window) = match kind {
        ExperimentKind::VarianceScan => (3.0, Some((-2.4, -1.7))),
        ExperimentKind::EdgeScan => (3.0, Some((-1.6, -1.1))),
        _ => (4.0, None),
    };
    if !ctx.multi_n() {
        ctx.checks.push(Check::skipped(
            "normalized_spread",
            "needs at least two sizes",
        ));
        return Ok(());
    }
    let s = spread(&normalized);
    ctx.checks.push(Check::new(
        "normalized_spread",
        s < spread_limit,
        format!("max/min of normalized variance {s:.4} (limit {spread_limit})"),
    ));
    if let (Some((lo, hi)), None) = (window, ctx.config.index) {
        let slope = ctx.fit_slope("raw_exponent").unwrap_or(f64::NAN);
        ctx.checks.push(Check::new(
            "raw_exponent",
            (lo..=hi).contains(&slope),
            format!("slope {slope:.4} (window [{lo}, {hi}])"),
        ));
    }
    Ok(())
}

fn thresholds_for(config: &ExperimentConfig, law: &MpLaw) -> Vec<f64> {
    config.thresholds.clone().unwrap_or_else(|| bulk_grid(law))
}

fn counting_u_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 * 0.5).collect()
}

fn counting_scan(ctx: &mut RunContext<'_>) -> Result<(), Error> {
    let mut profile_table = Table::new(
        "counting_scan",
        &[
            "n",
            "t",
            "n_mu_t",
            "mean_count",
            "mean_stderr",
            "var_count",
            "var_stderr",
            "var_over_log_n",
        ],
    );
    let mut tail_table = Table::new(
        "counting_scan_bernstein",
        &["n", "t", "u", "frequency", "stderr", "bound"],
    );
    let mut summary = Table::new(
        "counting_scan_summary",
        &[
            "n",
            "sup_mean_deviation",
            "sup_stderr",
            "c1_hat",
            "max_var_over_log_n",
            "bernoulli_violations",
            "bernstein_violations",
        ],
    );
    let mut bernoulli_total = 0;
    let mut bernstein_total = 0;
    let mut sups = Vec::new();
    let mut scaled = Vec::new();
    for &n in &ctx.config.n_list {
        let spec = ctx.spec(n, ctx.config.entry_kind)?;
        let law = spec.law();
        let grid = thresholds_for(ctx.config, &law);
        let set = ctx.replicas(&spec, STREAM_MAIN, "main")?;
        let profile = CountingProfile::from_spectra(&law, &grid, &set.spectra)?;
        let log_n = ln(n);
        for (k, &t) in grid.iter().enumerate() {
            profile_table.push(vec![
                n.into(),
                t.into(),
                profile.expected_count[k].into(),
                profile.mean_count[k].into(),
                profile.mean_stderr[k].into(),
                profile.var_count[k].into(),
                profile.var_stderr[k].into(),
                (profile.var_count[k] / log_n).into(),
            ]);
        }
        let (c1, tails) = bernstein_check(&law, &set.spectra, &grid, &counting_u_grid())?;
        let mut violations = 0usize;
        for row in &tails {
            if row.frequency > row.bound + Z_ALLOWANCE * row.stderr {
                violations += 1;
            }
            tail_table.push(vec![
                n.into(),
                row.t.into(),
                row.u.into(),
                row.frequency.into(),
                row.stderr.into(),
                row.bound.into(),
            ]);
        }
        let bernoulli = profile.bernoulli_violations(Z_ALLOWANCE).len();
        let sup = profile.mean_deviation_sup();
        let max_scaled = profile.var_count.iter().copied().fold(0.0, f64::max) / log_n;
        summary.push(vec![
            n.into(),
            sup.0.into(),
            sup.1.into(),
            c1.into(),
            max_scaled.into(),
            bernoulli.into(),
            violations.into(),
        ]);
        bernoulli_total += bernoulli;
        bernstein_total += violations;
        sups.push(sup);
        if n >= 2 {
            scaled.push(max_scaled);
        }
    }
    ctx.tables.push(profile_table);
    ctx.tables.push(tail_table);
    ctx.tables.push(summary);
    ctx.checks.push(Check::new(
        "bernoulli_variance",
        bernoulli_total == 0,
        format!("{bernoulli_total} thresholds with Var N_t > E N_t + {Z_ALLOWANCE} stderr"),
    ));
    ctx.checks.push(Check::new(
        "bernstein_tail",
        bernstein_total == 0,
        format!("{bernstein_total} table cells above the bound + {Z_ALLOWANCE} stderr"),
    ));
    if !ctx.multi_n() || scaled.len() < 2 {
        ctx.checks.push(Check::skipped(
            "log_variance_bound",
            "needs at least two sizes",
        ));
        ctx.checks.push(Check::skipped(
            "mean_deviation_stable",
            "needs at least two sizes",
        ));
        return Ok(());
    }
    let s = spread(&scaled);
    ctx.checks.push(Check::new(
        "log_variance_bound",
        s <= 2.0,
        format!("max/min over n of max_t Var N_t / log n: {s:.4} (limit 2)"),
    ));
    let (d1, se1) = sups[0];
    let worst = sups[1..]
        .iter()
        .map(|&(d, se)| d - d1 - Z_ALLOWANCE * se1.hypot(se))
        .fold(f64::NEG_INFINITY, f64::max);
    ctx.checks.push(Check::new(
        "mean_deviation_stable",
        worst <= 0.0,
        format!(
            "sup_t |E N_t - n mu_t| by n: {:?}; largest excess over the smallest size {worst:.4}",
            sups.iter()
                .map(|s| (s.0 * 1e4).round() / 1e4)
                .collect::<Vec<_>>()
        ),
    ));
    Ok(())
}

fn interlace_scan(ctx: &mut RunContext<'_>) -> Result<(), Error> {
    let mut table = Table::new(
        "interlace_check",
        &[
            "n",
            "t",
            "mean_complex",
            "mean_real_avg",
            "diff",
            "bound",
            "stderr",
            "var_complex",
            "var_real_avg",
            "half_var_real",
        ],
    );
    let mut tails = Table::new(
        "interlace_check_real_deviation",
        &["n", "t", "u", "frequency", "stderr", "bound"],
    );
    let mut summary = Table::new(
        "interlace_check_summary",
        &[
            "n",
            "c1_prime",
            "mean_violations",
            "tail_violations",
            "replicas",
        ],
    );
    let (mut mean_total, mut tail_total) = (0, 0);
    for &n in &ctx.config.n_list {
        let complex = ctx.spec(n, EntryKind::GaussianComplex)?;
        let real = complex.with_entry(EntryKind::GaussianReal);
        let law = complex.law();
        let grid = thresholds_for(ctx.config, &law);
        let sets = ctx.aligned(&[
            (complex, STREAM_MAIN, "complex"),
            (real, STREAM_PAIR[0], "real_a"),
            (real, STREAM_PAIR[1], "real_b"),
        ])?;
        let report = InterlaceReport::from_spectra(&law, &grid, &sets[0], &sets[1], &sets[2])?;
        for r in &report.rows {
            table.push(vec![
                n.into(),
                r.t.into(),
                r.mean_complex.into(),
                r.mean_real_avg.into(),
                r.diff.into(),
                r.bound.into(),
                r.stderr.into(),
                r.var_complex.into(),
                r.var_real_avg.into(),
                r.half_var_real.into(),
            ]);
        }
        let profile = CountingProfile::from_spectra(&law, &grid, &sets[0])?;
        let deviation = real_counting_deviation_from_spectra(
            &law,
            &sets[1],
            &grid,
            &counting_u_grid(),
            &profile.var_count,
        )?;
        for r in &deviation.rows {
            tails.push(vec![
                n.into(),
                r.t.into(),
                r.u.into(),
                r.frequency.into(),
                r.stderr.into(),
                r.bound.into(),
            ]);
        }
        let mv = report.violations(Z_ALLOWANCE).len();
        let tv = deviation.violations(Z_ALLOWANCE).len();
        summary.push(vec![
            n.into(),
            deviation.c1_prime.into(),
            mv.into(),
            tv.into(),
            report.replicas.into(),
        ]);
        mean_total += mv;
        tail_total += tv;
    }
    ctx.tables.push(table);
    ctx.tables.push(tails);
    ctx.tables.push(summary);
    ctx.checks.push(Check::new(
        "mean_difference",
        mean_total == 0,
        format!("{mean_total} thresholds with |diff| > 3/2 + {Z_ALLOWANCE} stderr"),
    ));
    ctx.checks.push(Check::new(
        "real_deviation",
        tail_total == 0,
        format!("{tail_total} table cells above the capped bound + {Z_ALLOWANCE} stderr"),
    ));
    Ok(())
}

fn w2_scan(ctx: &mut RunContext<'_>) -> Result<(), Error> {
    let mut per_replica = Table::new(
        "w2_scan",
        &["n", "replica", "w2_squared", "w2_upper_bound", "kolmogorov"],
    );
    let mut summary = Table::new(
        "w2_scan_summary",
        &[
            "n",
            "mean_w2",
            "stderr_w2",
            "normalized_w2",
            "normalized_stderr",
            "mean_upper_bound",
            "mean_kolmogorov",
            "stderr_kolmogorov",
            "bound_violations",
            "replicas",
        ],
    );
    let (mut ns, mut w2m, mut w2se, mut corr, mut norm, mut bounds, mut dks, mut dk_se) = (
        vec![],
        vec![],
        vec![],
        vec![],
        vec![],
        vec![],
        vec![],
        vec![],
    );
    let mut violations_total = 0;
    for &n in &ctx.config.n_list {
        let spec = ctx.spec(n, ctx.config.entry_kind)?;
        let law = spec.law();
        cached_classical_locations(&law);
        let set = ctx.replicas(&spec, STREAM_MAIN, "main")?;
        let rows = set
            .spectra
            .par_iter()
            .map(|s| distance_row(s, &law))
            .collect::<Result<Vec<_>, Error>>()?;
        let mut violations = 0usize;
        for (r, row) in set.indices.iter().zip(&rows) {
            if row.w2_squared > row.w2_upper_bound * (1.0 + 1e-8) {
                violations += 1;
            }
            per_replica.push(vec![
                n.into(),
                (*r).into(),
                row.w2_squared.into(),
                row.w2_upper_bound.into(),
                row.kolmogorov.into(),
            ]);
        }
        let w2: Vec<f64> = rows.iter().map(|r| r.w2_squared).collect();
        let ub: Vec<f64> = rows.iter().map(|r| r.w2_upper_bound).collect();
        let dk: Vec<f64> = rows.iter().map(|r| r.kolmogorov).collect();
        let factor = (n as f64).powi(2) / ln(n);
        let (m, se) = (mean(&w2), mean_stderr(&w2));
        summary.push(vec![
            n.into(),
            m.into(),
            se.into(),
            (m * factor).into(),
            (se * factor).into(),
            mean(&ub).into(),
            mean(&dk).into(),
            mean_stderr(&dk).into(),
            violations.into(),
            rows.len().into(),
        ]);
        violations_total += violations;
        ns.push(n as f64);
        w2m.push(m);
        w2se.push(se);
        corr.push(m / ln(n));
        norm.push(m * factor);
        bounds.push(mean(&ub));
        dks.push(mean(&dk));
        dk_se.push(mean_stderr(&dk));
    }
    ctx.tables.push(per_replica);
    ctx.tables.push(summary);
    let corr_se: Vec<f64> = w2se.iter().zip(&ns).map(|(s, n)| s / n.ln()).collect();
    ctx.fit("raw_exponent", &ns, &w2m, Some(&w2se));
    ctx.fit("log_corrected_exponent", &ns, &corr, Some(&corr_se));
    ctx.fit("upper_bound_exponent", &ns, &bounds, None);
    ctx.fit("kolmogorov_exponent", &ns, &dks, Some(&dk_se));
    ctx.checks.push(Check::new(
        "upper_bound",
        violations_total == 0,
        format!("{violations_total} replicas with W2² above the bound"),
    ));
    if ctx.multi_n() {
        let s = spread(&norm);
        ctx.checks.push(Check::new(
            "normalized_spread",
            s < 3.0,
            format!("max/min of E W2² n²/log n {s:.4} (limit 3)"),
        ));
    } else {
        ctx.checks.push(Check::skipped(
            "normalized_spread",
            "needs at least two sizes",
        ));
    }
    Ok(())
}

fn locations(ctx: &mut RunContext<'_>) -> Result<(), Error> {
    let (mut edge_bad, mut gap_bad, mut checked) = (0usize, 0usize, 0usize);
    for &n in &ctx.config.n_list {
        let m = (ctx.config.ratio * n as f64).round() as usize;
        let law = MpLaw::new(m, n)?;
        let loc = cached_classical_locations(&law);
        let mut table = Table::new(format!("locations_n{n}"), &["j", "gamma_j"]);
        for (j, g) in loc.rows() {
            table.push(vec![j.into(), g.into()]);
            let bounds = law.edge_bounds_at(j, g);
            if !bounds.right_holds(1e-8) || !bounds.left_holds(1e-8) {
                edge_bad += 1;
            }
            if g - loc.gamma(j - 1) > law.gap_bound(j)? {
                gap_bad += 1;
            }
            checked += 1;
        }
        ctx.tables.push(table);
    }
    ctx.checks.push(Check::new(
        "edge_distance",
        edge_bad == 0,
        format!("{edge_bad} of {checked} locations violate an edge-distance bound"),
    ));
    ctx.checks.push(Check::new(
        "gap_bound",
        gap_bad == 0,
        format!("{gap_bad} of {checked} spacings exceed the gap bound"),
    ));
    Ok(())
}

fn audit(ctx: &mut RunContext<'_>) -> Result<(), Error> {
    let entry = ctx.config.entry_kind;
    let audit = moment_audit(entry, ctx.config.samples, ctx.config.master_seed)?;
    let mut table = Table::new(
        "moment_audit",
        &["order", "empirical", "stderr", "analytic", "z_score"],
    );
    let mut worst: f64 = 0.0;
    for row in &audit.rows {
        worst = worst.max(row.z_score.abs());
        table.push(vec![
            (row.order as usize).into(),
            row.empirical.into(),
            row.stderr.into(),
            row.analytic.into(),
            row.z_score.into(),
        ]);
    }
    ctx.tables.push(table);
    ctx.checks.push(Check::new(
        "moments",
        worst <= 5.0,
        format!("largest |z| over orders 1..8: {worst:.3} (limit 5)"),
    ));
    let mut trace = Table::new(
        "moment_audit_trace",
        &[
            "n",
            "m",
            "mean_trace_s4",
            "stderr",
            "eighth_moment",
            "ceiling",
        ],
    );
    let mut bad = 0;
    for &n in &ctx.config.n_list {
        let spec = ctx.spec(n, entry)?;
        let set = ctx.replicas(&spec, STREAM_MAIN, "main")?;
        let check = TraceMomentCheck::from_spectra(&spec, &set.spectra);
        if !check.holds(Z_ALLOWANCE) {
            bad += 1;
        }
        trace.push(vec![
            n.into(),
            spec.m.into(),
            check.mean.into(),
            check.stderr.into(),
            check.eighth_moment.into(),
            check.ceiling.into(),
        ]);
    }
    ctx.tables.push(trace);
    ctx.checks.push(Check::new(
        "trace_ceiling",
        bad == 0,
        format!("{bad} sizes with E Tr S^4 above the ceiling + {Z_ALLOWANCE} stderr"),
    ));
    Ok(())
}

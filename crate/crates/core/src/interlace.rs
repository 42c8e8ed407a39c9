//! First-moment consequences of the interlacing identity between complex
//! and real covariance counting functions.
//!
//! In law, `N_t(complex) = (N_t(real) + N_t(real'))/2 + ζ` with the two real
//! draws independent and `ζ ∈ [-3/2, 3/2]`. Only that literal consequence is
//! asserted: `|E N_t(complex) - E N_t(real)| ≤ 3/2`.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::ensembles::{sample_replicas, EnsembleSpec, EntryKind, STREAM_MAIN, STREAM_PAIR};
use crate::error::{Error, Result};
use crate::linalg::SpectrumSample;
use crate::mp_law::MpLaw;
use crate::spectral_stats::{counting_function, counting_tails, CountingProfile};
use crate::summary::{mean, sample_variance};

pub const MIN_INTERLACE_REPLICAS: usize = 500;
/// Range bound of the correction term.
pub const ZETA_BOUND: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterlaceRow {
    pub t: f64,
    pub mean_complex: f64,
    pub mean_real_avg: f64,
    pub diff: f64,
    pub bound: f64,
    pub stderr: f64,
    pub var_complex: f64,
    pub var_real_avg: f64,
    /// `Var(N_t(real)) / 2`, what the half-sum variance would be under
    /// independence.
    pub half_var_real: f64,
}

impl InterlaceRow {
    pub fn holds(&self, z: f64) -> bool {
        self.diff.abs() <= self.bound + z * self.stderr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterlaceReport {
    pub n: usize,
    pub m: usize,
    pub replicas: usize,
    pub rows: Vec<InterlaceRow>,
}

impl InterlaceReport {
    /// `complex[r]` is paired with the independent real draws `real_a[r]`,
    /// `real_b[r]`.
    pub fn from_spectra(
        law: &MpLaw,
        thresholds: &[f64],
        complex: &[SpectrumSample],
        real_a: &[SpectrumSample],
        real_b: &[SpectrumSample],
    ) -> Result<Self> {
        let r = complex.len();
        if r < 2 || real_a.len() != r || real_b.len() != r {
            return Err(Error::TooFew {
                what: "paired replicas",
                needed: r.max(2),
                got: r.min(real_a.len()).min(real_b.len()),
            });
        }
        let rows = thresholds
            .iter()
            .map(|&t| {
                let nc: Vec<f64> = complex
                    .iter()
                    .map(|s| counting_function(s, t) as f64)
                    .collect();
                let na: Vec<f64> = real_a
                    .iter()
                    .map(|s| counting_function(s, t) as f64)
                    .collect();
                let nb: Vec<f64> = real_b
                    .iter()
                    .map(|s| counting_function(s, t) as f64)
                    .collect();
                let avg: Vec<f64> = na.iter().zip(&nb).map(|(a, b)| 0.5 * (a + b)).collect();
                let singles: Vec<f64> = na.iter().chain(&nb).copied().collect();
                let (var_c, var_avg) = (sample_variance(&nc), sample_variance(&avg));
                let mean_complex = mean(&nc);
                let mean_real_avg = mean(&avg);
                InterlaceRow {
                    t,
                    mean_complex,
                    mean_real_avg,
                    diff: mean_complex - mean_real_avg,
                    bound: ZETA_BOUND,
                    stderr: ((var_c + var_avg) / r as f64).sqrt(),
                    var_complex: var_c,
                    var_real_avg: var_avg,
                    half_var_real: 0.5 * sample_variance(&singles),
                }
            })
            .collect();
        Ok(Self {
            n: law.n(),
            m: law.m(),
            replicas: r,
            rows,
        })
    }

    pub fn violations(&self, z: f64) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&k| !self.rows[k].holds(z))
            .collect()
    }
}

/// Samples `replicas` complex Gaussian spectra and, per replica, two real
/// Gaussian spectra on disjoint streams.
pub fn interlace_check(
    n: usize,
    m: usize,
    thresholds: &[f64],
    replicas: usize,
    master_seed: u64,
) -> Result<InterlaceReport> {
    if replicas < MIN_INTERLACE_REPLICAS {
        return Err(Error::TooFew {
            what: "replicas",
            needed: MIN_INTERLACE_REPLICAS,
            got: replicas,
        });
    }
    let complex = EnsembleSpec::new(m, n, EntryKind::GaussianComplex, master_seed)?;
    let real = complex.with_entry(EntryKind::GaussianReal);
    let range = 0..replicas as u64;
    let draw = |spec: &EnsembleSpec, stream| -> Result<Vec<SpectrumSample>> {
        sample_replicas(spec, range.clone(), stream)
            .into_iter()
            .collect()
    };
    InterlaceReport::from_spectra(
        &complex.law(),
        thresholds,
        &draw(&complex, STREAM_MAIN)?,
        &draw(&real, STREAM_PAIR[0])?,
        &draw(&real, STREAM_PAIR[1])?,
    )
}

/// `min(1, 2√2 exp(-u² / (4σ² + 2u)))`.
pub fn real_counting_bound(u: f64, sigma_sq: f64) -> f64 {
    let denom = 4.0 * sigma_sq + 2.0 * u;
    if denom <= 0.0 {
        return 1.0;
    }
    (2.0 * SQRT_2 * (-u * u / denom).exp()).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealDeviationRow {
    pub t: f64,
    pub u: f64,
    pub frequency: f64,
    pub stderr: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealDeviationTable {
    /// `Ĉ₁' = sup_t |Ê N_t(real) - n μ_t|`
    pub c1_prime: f64,
    pub rows: Vec<RealDeviationRow>,
}

impl RealDeviationTable {
    pub fn violations(&self, z: f64) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&k| {
                let r = &self.rows[k];
                r.frequency > r.bound + z * r.stderr
            })
            .collect()
    }
}

/// Real-case tails `P(|N_t - n μ_t| ≥ u + Ĉ₁')` against the bound built on
/// the complex-case variances `sigma_sq` (one per threshold).
pub fn real_counting_deviation_from_spectra(
    law: &MpLaw,
    real: &[SpectrumSample],
    thresholds: &[f64],
    u_grid: &[f64],
    sigma_sq: &[f64],
) -> Result<RealDeviationTable> {
    if sigma_sq.len() != thresholds.len() {
        return Err(Error::Unsupported(format!(
            "{} variances for {} thresholds",
            sigma_sq.len(),
            thresholds.len()
        )));
    }
    let profile = CountingProfile::from_spectra(law, thresholds, real)?;
    let (c1_prime, _) = profile.mean_deviation_sup();
    let rows = counting_tails(law, real, thresholds, u_grid, c1_prime)?
        .into_iter()
        .enumerate()
        .map(|(idx, (t, u, frequency, stderr))| RealDeviationRow {
            t,
            u,
            frequency,
            stderr,
            bound: real_counting_bound(u, sigma_sq[idx / u_grid.len()].max(0.0)),
        })
        .collect();
    Ok(RealDeviationTable { c1_prime, rows })
}

pub fn real_counting_deviation(
    spec_real: &EnsembleSpec,
    thresholds: &[f64],
    u_grid: &[f64],
    replicas: usize,
    sigma_sq: &[f64],
) -> Result<RealDeviationTable> {
    if spec_real.entry.is_complex() {
        return Err(Error::Unsupported(
            "real counting deviation needs a real entry kind".into(),
        ));
    }
    let real: Vec<SpectrumSample> = sample_replicas(spec_real, 0..replicas as u64, STREAM_MAIN)
        .into_iter()
        .collect::<Result<_>>()?;
    real_counting_deviation_from_spectra(&spec_real.law(), &real, thresholds, u_grid, sigma_sq)
}

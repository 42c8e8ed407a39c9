//! Counting-function and per-eigenvalue Monte Carlo statistics.

use serde::{Deserialize, Serialize};

use crate::ensembles::{sample_replicas, EnsembleSpec, STREAM_MAIN};
use crate::error::{Error, Result};
use crate::linalg::SpectrumSample;
use crate::mp_law::{cached_classical_locations, MpLaw};
use crate::summary::{frequency_stderr, mean, mean_stderr, pairwise_sum, variance_with_jackknife};

pub const MIN_PROFILE_REPLICAS: usize = 100;
pub const MIN_STATISTICS_REPLICAS: usize = 3;
pub const BULK_GRID_POINTS: usize = 21;

/// `N_t = #{i : λ_i ≤ t}`.
pub fn counting_function(spectrum: &SpectrumSample, t: f64) -> usize {
    spectrum.as_slice().partition_point(|&x| x <= t)
}

/// `BULK_GRID_POINTS` equally spaced thresholds in `[a + δ, b - δ]` with
/// `δ = (b - a) / 10`.
pub fn bulk_grid(law: &MpLaw) -> Vec<f64> {
    let delta = law.width() / 10.0;
    let lo = law.lower_edge() + delta;
    let hi = law.upper_edge() - delta;
    let steps = (BULK_GRID_POINTS - 1) as f64;
    (0..BULK_GRID_POINTS)
        .map(|k| lo + (hi - lo) * k as f64 / steps)
        .collect()
}

/// Samples replicas `0..replicas` of `spec`, failing on any decomposition
/// error (the harness applies its own exclusion policy instead).
pub(crate) fn sample_all(spec: &EnsembleSpec, replicas: usize) -> Result<Vec<SpectrumSample>> {
    sample_replicas(spec, 0..replicas as u64, STREAM_MAIN)
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingProfile {
    pub n: usize,
    pub replicas: usize,
    pub thresholds: Vec<f64>,
    pub mean_count: Vec<f64>,
    pub mean_stderr: Vec<f64>,
    pub var_count: Vec<f64>,
    pub var_stderr: Vec<f64>,
    /// `n μ_t` at each threshold.
    pub expected_count: Vec<f64>,
}

impl CountingProfile {
    pub fn from_spectra(
        law: &MpLaw,
        thresholds: &[f64],
        spectra: &[SpectrumSample],
    ) -> Result<Self> {
        if spectra.len() < 2 {
            return Err(Error::TooFew {
                what: "replicas",
                needed: 2,
                got: spectra.len(),
            });
        }
        let n = law.n();
        let mut profile = Self {
            n,
            replicas: spectra.len(),
            thresholds: thresholds.to_vec(),
            mean_count: Vec::with_capacity(thresholds.len()),
            mean_stderr: Vec::with_capacity(thresholds.len()),
            var_count: Vec::with_capacity(thresholds.len()),
            var_stderr: Vec::with_capacity(thresholds.len()),
            expected_count: Vec::with_capacity(thresholds.len()),
        };
        for &t in thresholds {
            let counts: Vec<f64> = spectra
                .iter()
                .map(|s| counting_function(s, t) as f64)
                .collect();
            let (var, var_se) = variance_with_jackknife(&counts);
            profile.mean_count.push(mean(&counts));
            profile.mean_stderr.push(mean_stderr(&counts));
            profile.var_count.push(var);
            profile
                .var_stderr
                .push(if var_se.is_nan() { 0.0 } else { var_se });
            profile.expected_count.push(n as f64 * law.cdf(t)?);
        }
        Ok(profile)
    }

    /// `sup_t |Ê N_t - n μ_t|` with the standard error at the maximiser.
    pub fn mean_deviation_sup(&self) -> (f64, f64) {
        let mut best = (0.0, 0.0);
        for k in 0..self.thresholds.len() {
            let d = (self.mean_count[k] - self.expected_count[k]).abs();
            if d > best.0 {
                best = (d, self.mean_stderr[k]);
            }
        }
        best
    }

    /// Indices where `Var N_t > E N_t + z · stderr`, the combined stderr
    /// being that of the difference of the two estimates.
    pub fn bernoulli_violations(&self, z: f64) -> Vec<usize> {
        (0..self.thresholds.len())
            .filter(|&k| {
                let se = self.var_stderr[k].hypot(self.mean_stderr[k]);
                self.var_count[k] > self.mean_count[k] + z * se
            })
            .collect()
    }
}

/// Monte Carlo profile of `N_t` over `thresholds`.
pub fn counting_profile(
    spec: &EnsembleSpec,
    thresholds: &[f64],
    replicas: usize,
) -> Result<CountingProfile> {
    if replicas < MIN_PROFILE_REPLICAS {
        return Err(Error::TooFew {
            what: "replicas",
            needed: MIN_PROFILE_REPLICAS,
            got: replicas,
        });
    }
    let spectra = sample_all(spec, replicas)?;
    CountingProfile::from_spectra(&spec.law(), thresholds, &spectra)
}

/// Normalisation of the deviation `|λ_j - γ_j|` in a tail table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailScale {
    /// `u / n`
    Bulk,
    /// `u / (n^{2/3} (n - j)^{1/3})`
    Intermediate,
    /// `u · b`
    Edge,
}

impl TailScale {
    /// Edge when `j = n` or `n - j < k log n`, intermediate when `j > 9n/10`, bulk
    /// otherwise.
    pub fn classify(n: usize, j: usize, k: f64) -> Self {
        let gap = (n - j) as f64;
        if j == n || gap < k * (n as f64).ln() {
            Self::Edge
        } else if 10 * j > 9 * n {
            Self::Intermediate
        } else {
            Self::Bulk
        }
    }

    /// Deviation corresponding to `u` at index `j`.
    pub fn threshold(self, law: &MpLaw, j: usize, u: f64) -> f64 {
        let n = law.n() as f64;
        match self {
            Self::Bulk => u / n,
            Self::Intermediate => u / (n.powf(2.0 / 3.0) * ((law.n() - j) as f64).cbrt()),
            Self::Edge => u * law.upper_edge(),
        }
    }

    /// The logarithm entering the deviation bound.
    pub fn log_factor(self, law: &MpLaw, j: usize) -> Option<f64> {
        match self {
            Self::Bulk => Some((law.n() as f64).ln()),
            Self::Intermediate => Some(((law.n() - j) as f64).ln()),
            Self::Edge => None,
        }
    }

    pub fn default_u_grid(self) -> Vec<f64> {
        match self {
            Self::Bulk | Self::Intermediate => (0..=24).map(|k| k as f64 * 0.5).collect(),
            Self::Edge => (0..=20).map(|k| k as f64 * 0.01).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub u: f64,
    pub threshold: f64,
    pub frequency: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaStatistics {
    pub index: usize,
    pub gamma: f64,
    pub replicas: usize,
    pub mean_lambda: f64,
    pub var_lambda: f64,
    pub stderr_var: f64,
    /// `(1/R) Σ (λ_j - γ_j)²`
    pub second_moment: f64,
    pub scale: TailScale,
    pub tail: Vec<TailRow>,
}

impl ReplicaStatistics {
    pub fn from_spectra(
        law: &MpLaw,
        spectra: &[SpectrumSample],
        j: usize,
        scale: TailScale,
        u_grid: &[f64],
    ) -> Result<Self> {
        let n = law.n();
        if j == 0 || j > n {
            return Err(Error::IndexOutOfRange { index: j, n });
        }
        if spectra.len() < MIN_STATISTICS_REPLICAS {
            return Err(Error::TooFew {
                what: "replicas",
                needed: MIN_STATISTICS_REPLICAS,
                got: spectra.len(),
            });
        }
        let gamma = cached_classical_locations(law).gamma(j);
        let values: Vec<f64> = spectra.iter().map(|s| s.lambda(j)).collect();
        let (var_lambda, stderr_var) = variance_with_jackknife(&values);
        let sq: Vec<f64> = values.iter().map(|x| (x - gamma) * (x - gamma)).collect();
        let r = values.len();
        let tail = u_grid
            .iter()
            .map(|&u| {
                let threshold = scale.threshold(law, j, u);
                let hits = values
                    .iter()
                    .filter(|&&x| (x - gamma).abs() >= threshold)
                    .count();
                let frequency = hits as f64 / r as f64;
                TailRow {
                    u,
                    threshold,
                    frequency,
                    stderr: frequency_stderr(frequency, r),
                }
            })
            .collect();
        Ok(Self {
            index: j,
            gamma,
            replicas: r,
            mean_lambda: mean(&values),
            var_lambda,
            stderr_var,
            second_moment: pairwise_sum(&sq) / r as f64,
            scale,
            tail,
        })
    }
}

/// Per-index statistics over replicas `0..replicas` of `spec`. Tail tables
/// use the normalisation of each index's regime (see [`TailScale::classify`]
/// with `K = 1`).
pub fn eigenvalue_statistics(
    spec: &EnsembleSpec,
    indices: &[usize],
    replicas: usize,
) -> Result<Vec<ReplicaStatistics>> {
    let law = spec.law();
    if let Some(&bad) = indices.iter().find(|&&j| j == 0 || j > spec.n) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            n: spec.n,
        });
    }
    if replicas < MIN_STATISTICS_REPLICAS {
        return Err(Error::TooFew {
            what: "replicas",
            needed: MIN_STATISTICS_REPLICAS,
            got: replicas,
        });
    }
    let spectra = sample_all(spec, replicas)?;
    indices
        .iter()
        .map(|&j| {
            let scale = TailScale::classify(spec.n, j, 1.0);
            ReplicaStatistics::from_spectra(&law, &spectra, j, scale, &scale.default_u_grid())
        })
        .collect()
}

/// `min(1, 2 exp(-u² / (2σ² + u)))`.
pub fn bernstein_bound(u: f64, sigma_sq: f64) -> Result<f64> {
    if !(u >= 0.0 && u.is_finite()) {
        return Err(Error::OutOfRange {
            what: "u",
            value: u,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if !(sigma_sq >= 0.0 && sigma_sq.is_finite()) {
        return Err(Error::OutOfRange {
            what: "sigma_sq",
            value: sigma_sq,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let denom = 2.0 * sigma_sq + u;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((2.0 * (-u * u / denom).exp()).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingTailRow {
    pub t: f64,
    pub u: f64,
    pub frequency: f64,
    pub stderr: f64,
    pub bound: f64,
}

/// Empirical `P(|N_t - n μ_t| ≥ u + offset)` on a `thresholds × u_grid` table.
pub(crate) fn counting_tails(
    law: &MpLaw,
    spectra: &[SpectrumSample],
    thresholds: &[f64],
    u_grid: &[f64],
    offset: f64,
) -> Result<Vec<(f64, f64, f64, f64)>> {
    let n = law.n() as f64;
    let r = spectra.len();
    let mut rows = Vec::with_capacity(thresholds.len() * u_grid.len());
    for &t in thresholds {
        let center = n * law.cdf(t)?;
        let dev: Vec<f64> = spectra
            .iter()
            .map(|s| (counting_function(s, t) as f64 - center).abs())
            .collect();
        for &u in u_grid {
            let hits = dev.iter().filter(|&&d| d >= u + offset).count();
            let p = hits as f64 / r as f64;
            rows.push((t, u, p, frequency_stderr(p, r)));
        }
    }
    Ok(rows)
}

/// Bernstein tail table: empirical `P(|N_t - n μ_t| ≥ u + Ĉ₁)` against
/// `bernstein_bound(u, σ̂_t²)`, with `Ĉ₁ = sup_t |Ê N_t - n μ_t|` taken from
/// the same replicas.
pub fn bernstein_check(
    law: &MpLaw,
    spectra: &[SpectrumSample],
    thresholds: &[f64],
    u_grid: &[f64],
) -> Result<(f64, Vec<CountingTailRow>)> {
    let profile = CountingProfile::from_spectra(law, thresholds, spectra)?;
    let (c1, _) = profile.mean_deviation_sup();
    let table = counting_tails(law, spectra, thresholds, u_grid, c1)?;
    let rows = table
        .into_iter()
        .map(|(t, u, frequency, stderr)| {
            let k = thresholds.iter().position(|&x| x == t).unwrap_or(0);
            Ok(CountingTailRow {
                t,
                u,
                frequency,
                stderr,
                bound: bernstein_bound(u, profile.var_count[k].max(0.0))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((c1, rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub u: f64,
    pub frequency: f64,
    pub stderr: f64,
    pub bound: f64,
}

/// Empirical tails of one eigenvalue with the bound
/// `4 exp(-C² u² / (C' L + C u))` fitted to dominate them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationTable {
    pub index: usize,
    pub scale: TailScale,
    pub log_factor: f64,
    pub c: f64,
    pub c_prime: f64,
    pub rows: Vec<DeviationRow>,
}

impl DeviationTable {
    pub fn bound_at(&self, u: f64) -> f64 {
        deviation_bound(u, self.c, self.c_prime, self.log_factor)
    }

    /// OLS slope of `ln p̂` against `u` over rows with `0 < p̂ < 1`.
    pub fn log_tail_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.frequency > 0.0 && r.frequency < 1.0)
            .map(|r| (r.u, r.frequency.ln()))
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some(sxy / sxx)
    }
}

fn deviation_bound(u: f64, c: f64, c_prime: f64, log_factor: f64) -> f64 {
    let denom = c_prime * log_factor + c * u;
    if denom <= 0.0 {
        return 1.0;
    }
    (4.0 * (-c * c * u * u / denom).exp()).min(1.0)
}

/// Fits `(C, C')`: for each `C` on a log grid, `C'` is the smallest value
/// making the bound dominate every empirical point; the pair with the
/// smallest total bound over the grid wins.
fn fit_deviation_constants(rows: &[(f64, f64)], log_factor: f64) -> (f64, f64) {
    let mut best = (f64::INFINITY, 1.0, 0.0);
    for k in 0..=400 {
        let c = 10f64.powf(-2.0 + 4.0 * k as f64 / 400.0);
        let mut c_prime: f64 = 0.0;
        for &(u, p) in rows {
            if p <= 0.0 || u <= 0.0 {
                continue;
            }
            let q = (4.0 / p).ln();
            c_prime = c_prime.max((c * c * u * u / q - c * u) / log_factor);
        }
        // the binding point sits exactly on the curve; keep it on the safe side of rounding
        c_prime *= 1.0 + 1e-9;
        let total: f64 = rows
            .iter()
            .map(|&(u, _)| deviation_bound(u, c, c_prime, log_factor))
            .sum();
        if total < best.0 {
            best = (total, c, c_prime);
        }
    }
    (best.1, best.2)
}

/// Deviation table for eigenvalue `j` under a bulk or intermediate
/// normalisation. Edge normalisation has no logarithmic factor and is
/// rejected.
pub fn deviation_check(
    spec: &EnsembleSpec,
    j: usize,
    scale: TailScale,
    u_grid: &[f64],
    replicas: usize,
) -> Result<DeviationTable> {
    let spectra = sample_all(spec, replicas)?;
    deviation_table(&spec.law(), &spectra, j, scale, u_grid)
}

pub fn deviation_table(
    law: &MpLaw,
    spectra: &[SpectrumSample],
    j: usize,
    scale: TailScale,
    u_grid: &[f64],
) -> Result<DeviationTable> {
    let log_factor = scale
        .log_factor(law, j)
        .ok_or_else(|| Error::Unsupported("deviation bound at the edge scale".into()))?;
    if j == law.n() && scale == TailScale::Intermediate {
        return Err(Error::Unsupported("intermediate scale at j = n".into()));
    }
    let stats = ReplicaStatistics::from_spectra(law, spectra, j, scale, u_grid)?;
    let pts: Vec<(f64, f64)> = stats.tail.iter().map(|r| (r.u, r.frequency)).collect();
    let (c, c_prime) = fit_deviation_constants(&pts, log_factor);
    let rows = stats
        .tail
        .iter()
        .map(|r| DeviationRow {
            u: r.u,
            frequency: r.frequency,
            stderr: r.stderr,
            bound: deviation_bound(r.u, c, c_prime, log_factor),
        })
        .collect();
    Ok(DeviationTable {
        index: j,
        scale,
        log_factor,
        c,
        c_prime,
        rows,
    })
}

#[cfg(test)]
mod tests;

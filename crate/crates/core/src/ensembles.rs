//! Covariance ensembles with i.i.d. entries and reproducible replica streams.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, gram_matrix, SampleMatrix, SpectrumSample};
use crate::mp_law::MpLaw;
use crate::summary::pairwise_sum;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Entry distribution of `X`. All kinds are centred with `E|ξ|² = 1`; complex
/// kinds have independent real and imaginary parts of variance 1/2 each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    GaussianReal,
    GaussianComplex,
    MatchedDiscreteReal,
    MatchedDiscreteComplex,
}

pub type EntryDistribution = EntryKind;

impl EntryKind {
    pub const ALL: [EntryKind; 4] = [
        EntryKind::GaussianReal,
        EntryKind::GaussianComplex,
        EntryKind::MatchedDiscreteReal,
        EntryKind::MatchedDiscreteComplex,
    ];

    pub fn is_complex(self) -> bool {
        matches!(self, Self::GaussianComplex | Self::MatchedDiscreteComplex)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::GaussianReal => "gaussian_real",
            Self::GaussianComplex => "gaussian_complex",
            Self::MatchedDiscreteReal => "matched_discrete_real",
            Self::MatchedDiscreteComplex => "matched_discrete_complex",
        }
    }

    /// Draws one entry. Real kinds return a zero imaginary part.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> Complex64 {
        match self {
            Self::GaussianReal => Complex64::new(rng.sample(StandardNormal), 0.0),
            Self::GaussianComplex => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
            }
            Self::MatchedDiscreteReal => Complex64::new(matched_discrete(rng), 0.0),
            Self::MatchedDiscreteComplex => Complex64::new(
                matched_discrete(rng) * FRAC_1_SQRT_2,
                matched_discrete(rng) * FRAC_1_SQRT_2,
            ),
        }
    }

    /// `E[Re^p Im^q]`, exact.
    pub fn mixed_moment(self, p: u32, q: u32) -> f64 {
        let part = |k: u32, unit: fn(u32) -> f64, scale: f64| unit(k) * scale.powi(k as i32);
        match self {
            Self::GaussianReal => {
                if q == 0 {
                    gaussian_moment(p)
                } else {
                    0.0
                }
            }
            Self::MatchedDiscreteReal => {
                if q == 0 {
                    matched_moment(p)
                } else {
                    0.0
                }
            }
            Self::GaussianComplex => {
                part(p, gaussian_moment, FRAC_1_SQRT_2) * part(q, gaussian_moment, FRAC_1_SQRT_2)
            }
            Self::MatchedDiscreteComplex => {
                part(p, matched_moment, FRAC_1_SQRT_2) * part(q, matched_moment, FRAC_1_SQRT_2)
            }
        }
    }

    /// The moment the audit compares against: `E ξ^k` for real kinds and
    /// `E |ξ|^k` for complex kinds.
    pub fn audit_moment(self, k: u32) -> f64 {
        match self {
            Self::GaussianReal | Self::MatchedDiscreteReal => self.mixed_moment(k, 0),
            // |ξ|² ~ Exp(1)
            Self::GaussianComplex => gamma_half_integer(k + 2),
            // |ξ|² ∈ {0, 3/2, 3} with probabilities 4/9, 4/9, 1/9
            Self::MatchedDiscreteComplex => {
                if k == 0 {
                    1.0
                } else {
                    let h = f64::from(k) / 2.0;
                    4.0 / 9.0 * 1.5f64.powf(h) + 3f64.powf(h) / 9.0
                }
            }
        }
    }

    /// `E|ξ|⁸`, the constant in the trace ceiling.
    pub fn eighth_absolute_moment(self) -> f64 {
        match self {
            Self::GaussianReal | Self::MatchedDiscreteReal => self.mixed_moment(8, 0),
            _ => self.audit_moment(8),
        }
    }
}

impl std::fmt::Display for EntryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `(k-1)!!` for even `k`, zero for odd.
fn gaussian_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    (1..k).step_by(2).map(f64::from).product()
}

/// `E Y^k` for `Y ∈ {±√3}` w.p. 1/6 each, 0 w.p. 2/3.
fn matched_moment(k: u32) -> f64 {
    match k {
        0 => 1.0,
        k if k % 2 == 1 => 0.0,
        k => 3f64.powi(k as i32 / 2) / 3.0,
    }
}

/// `Γ(k/2)` for positive integer `k`.
fn gamma_half_integer(k: u32) -> f64 {
    let mut x = if k % 2 == 0 { 1.0 } else { 0.5 };
    let mut g = if k % 2 == 0 { 1.0 } else { PI.sqrt() };
    let target = f64::from(k) / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// `±√3` with probability 1/6 each, otherwise 0. Matches the standard
/// normal through the fourth moment.
#[inline]
pub fn matched_discrete<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    match rng.random_range(0..6u8) {
        0 => SQRT_3,
        1 => -SQRT_3,
        _ => 0.0,
    }
}

/// Stream tag for the primary draw of a replica.
pub const STREAM_MAIN: u64 = 0;
/// Stream tags of the two independent real draws paired with a replica.
pub const STREAM_PAIR: [u64; 2] = [1, 2];

/// 256-bit seed for `(master_seed, replica, stream)`.
pub fn stream_seed(master_seed: u64, replica: u64, stream: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(b"mp-spectra replica stream v1");
    hasher.update(master_seed.to_le_bytes());
    hasher.update(replica.to_le_bytes());
    hasher.update(stream.to_le_bytes());
    hasher.finalize().into()
}

pub fn replica_rng(master_seed: u64, replica: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(stream_seed(master_seed, replica, stream))
}

/// A covariance ensemble `S = X*X / n` with `X` of shape `m x n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub m: usize,
    pub n: usize,
    pub entry: EntryKind,
    pub master_seed: u64,
}

impl EnsembleSpec {
    pub fn new(m: usize, n: usize, entry: EntryKind, master_seed: u64) -> Result<Self> {
        if n == 0 || m < n {
            return Err(Error::InvalidDimensions { m, n });
        }
        Ok(Self {
            m,
            n,
            entry,
            master_seed,
        })
    }

    /// `m = round(ratio · n)`.
    pub fn with_ratio(n: usize, ratio: f64, entry: EntryKind, master_seed: u64) -> Result<Self> {
        if !ratio.is_finite() || ratio < 1.0 {
            return Err(Error::OutOfRange {
                what: "ratio",
                value: ratio,
                lo: 1.0,
                hi: f64::INFINITY,
            });
        }
        Self::new((ratio * n as f64).round() as usize, n, entry, master_seed)
    }

    pub fn law(&self) -> MpLaw {
        MpLaw::new(self.m, self.n).expect("validated dimensions")
    }

    pub fn with_entry(self, entry: EntryKind) -> Self {
        Self { entry, ..self }
    }

    /// Draws `X` from `rng`, column by column.
    pub fn sample_matrix<R: Rng + ?Sized>(&self, rng: &mut R) -> SampleMatrix {
        let len = self.m * self.n;
        if self.entry.is_complex() {
            let mut re = Vec::with_capacity(len);
            let mut im = Vec::with_capacity(len);
            for _ in 0..len {
                let z = self.entry.sample(rng);
                re.push(z.re);
                im.push(z.im);
            }
            SampleMatrix::Complex {
                rows: self.m,
                cols: self.n,
                re,
                im,
            }
        } else {
            let data = (0..len).map(|_| self.entry.sample(rng).re).collect();
            SampleMatrix::Real {
                rows: self.m,
                cols: self.n,
                data,
            }
        }
    }
}

/// Sorted spectrum of replica `replica` on the main stream.
pub fn sample_spectrum(spec: &EnsembleSpec, replica: u64) -> Result<SpectrumSample> {
    sample_spectrum_stream(spec, replica, STREAM_MAIN)
}

pub fn sample_spectrum_stream(
    spec: &EnsembleSpec,
    replica: u64,
    stream: u64,
) -> Result<SpectrumSample> {
    let mut rng = replica_rng(spec.master_seed, replica, stream);
    let x = spec.sample_matrix(&mut rng);
    let s = gram_matrix(&x)?;
    SpectrumSample::from_covariance(eigenvalues(&s)?.into_vec())
}

/// Replicas `range` in parallel, returned in replica order.
pub fn sample_replicas(
    spec: &EnsembleSpec,
    range: std::ops::Range<u64>,
    stream: u64,
) -> Vec<Result<SpectrumSample>> {
    range
        .into_par_iter()
        .map(|r| sample_spectrum_stream(spec, r, stream))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub order: u32,
    pub empirical: f64,
    pub stderr: f64,
    pub analytic: f64,
    pub z_score: f64,
}

/// Empirical moments 1..8 of an entry distribution against the exact ones
/// (raw moments for real kinds, absolute moments for complex kinds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentAudit {
    pub entry: EntryKind,
    pub samples: usize,
    pub rows: Vec<MomentRow>,
}

pub const MIN_AUDIT_SAMPLES: usize = 10_000;

pub fn moment_audit(entry: EntryKind, samples: usize, master_seed: u64) -> Result<MomentAudit> {
    if samples < MIN_AUDIT_SAMPLES {
        return Err(Error::TooFew {
            what: "audit samples",
            needed: MIN_AUDIT_SAMPLES,
            got: samples,
        });
    }
    const CHUNK: usize = 1 << 14;
    let chunks = samples.div_ceil(CHUNK);
    // powers 1..=16 per chunk, so the stderr of the 8th moment is available
    let partial: Vec<[f64; 16]> = (0..chunks as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = replica_rng(master_seed, c, STREAM_MAIN);
            let count = CHUNK.min(samples - c as usize * CHUNK);
            let mut powers: Vec<Vec<f64>> = (0..16).map(|_| Vec::with_capacity(count)).collect();
            for _ in 0..count {
                let z = entry.sample(&mut rng);
                let x = if entry.is_complex() { z.norm() } else { z.re };
                let mut p = 1.0;
                for slot in powers.iter_mut() {
                    p *= x;
                    slot.push(p);
                }
            }
            let mut sums = [0.0; 16];
            for (s, v) in sums.iter_mut().zip(&powers) {
                *s = pairwise_sum(v);
            }
            sums
        })
        .collect();
    let total = samples as f64;
    let moment =
        |k: usize| pairwise_sum(&partial.iter().map(|s| s[k - 1]).collect::<Vec<_>>()) / total;
    let rows = (1..=8u32)
        .map(|k| {
            let empirical = moment(k as usize);
            let spread = (moment(2 * k as usize) - empirical * empirical).max(0.0);
            let stderr = (spread / total).sqrt();
            let analytic = entry.audit_moment(k);
            let diff = empirical - analytic;
            let z_score = if stderr > 0.0 {
                diff / stderr
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY.copysign(diff)
            };
            MomentRow {
                order: k,
                empirical,
                stderr,
                analytic,
                z_score,
            }
        })
        .collect();
    Ok(MomentAudit {
        entry,
        samples,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_moment_examples() {
        assert_eq!(EntryKind::GaussianReal.eighth_absolute_moment(), 105.0);
        assert_eq!(EntryKind::GaussianComplex.eighth_absolute_moment(), 24.0);
        assert_eq!(
            EntryKind::MatchedDiscreteReal.eighth_absolute_moment(),
            27.0
        );
        assert!((EntryKind::MatchedDiscreteComplex.eighth_absolute_moment() - 11.25).abs() < 1e-14);
        assert_eq!(EntryKind::MatchedDiscreteReal.mixed_moment(2, 0), 1.0);
        assert_eq!(EntryKind::MatchedDiscreteReal.mixed_moment(4, 0), 3.0);
        assert!((EntryKind::MatchedDiscreteComplex.audit_moment(4) - 2.0).abs() < 1e-15);
        assert!((EntryKind::GaussianComplex.audit_moment(4) - 2.0).abs() < 1e-15);
        // Γ(3/2) = √π / 2
        assert!((EntryKind::GaussianComplex.audit_moment(1) - PI.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn four_moment_matching_is_exact() {
        let pairs = [
            (EntryKind::MatchedDiscreteReal, EntryKind::GaussianReal),
            (
                EntryKind::MatchedDiscreteComplex,
                EntryKind::GaussianComplex,
            ),
        ];
        for (matched, gaussian) in pairs {
            for p in 0..=4 {
                for q in 0..=(4 - p) {
                    let a = matched.mixed_moment(p, q);
                    let b = gaussian.mixed_moment(p, q);
                    assert!((a - b).abs() < 1e-15, "{matched} p={p} q={q}: {a} vs {b}");
                }
            }
            // they do differ at order six
            assert!((matched.mixed_moment(6, 0) - gaussian.mixed_moment(6, 0)).abs() > 1e-3);
        }
    }

    #[test]
    fn normalization_of_every_kind() {
        for kind in EntryKind::ALL {
            let e2 = kind.mixed_moment(2, 0) + kind.mixed_moment(0, 2);
            assert!((e2 - 1.0).abs() < 1e-15, "{kind}");
            let e_xi_sq = kind.mixed_moment(2, 0) - kind.mixed_moment(0, 2);
            if kind.is_complex() {
                assert!(e_xi_sq.abs() < 1e-15);
                assert_eq!(kind.mixed_moment(1, 1), 0.0);
            }
            assert_eq!(kind.mixed_moment(1, 0), 0.0);
        }
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a = stream_seed(1, 0, 0);
        assert_eq!(a, stream_seed(1, 0, 0));
        assert_ne!(a, stream_seed(1, 1, 0));
        assert_ne!(a, stream_seed(1, 0, 1));
        assert_ne!(a, stream_seed(2, 0, 0));
    }

    #[test]
    fn spectrum_is_deterministic() {
        let spec = EnsembleSpec::new(12, 6, EntryKind::GaussianComplex, 99).unwrap();
        let a = sample_spectrum(&spec, 5).unwrap();
        let b = sample_spectrum(&spec, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_spectrum(&spec, 6).unwrap());
        let batch = sample_replicas(&spec, 4..7, STREAM_MAIN);
        assert_eq!(batch[1].as_ref().unwrap(), &a);
    }

    #[test]
    fn one_by_one_gaussian_mean() {
        let spec = EnsembleSpec::new(1, 1, EntryKind::GaussianReal, 7).unwrap();
        let vals: Vec<f64> = sample_replicas(&spec, 0..100_000, STREAM_MAIN)
            .into_iter()
            .map(|s| s.unwrap().lambda(1))
            .collect();
        let m = crate::summary::mean(&vals);
        let se = crate::summary::mean_stderr(&vals);
        assert!((m - 1.0).abs() <= 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn complex_trace_mean_is_m() {
        let spec = EnsembleSpec::new(4, 2, EntryKind::GaussianComplex, 11).unwrap();
        let traces: Vec<f64> = sample_replicas(&spec, 0..20_000, STREAM_MAIN)
            .into_iter()
            .map(|s| s.unwrap().as_slice().iter().sum())
            .collect();
        let m = crate::summary::mean(&traces);
        let se = crate::summary::mean_stderr(&traces);
        assert!((m - 4.0).abs() <= 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn matched_sampler_support() {
        let mut rng = replica_rng(0, 0, 0);
        let mut counts = [0usize; 3];
        for _ in 0..60_000 {
            let x = matched_discrete(&mut rng);
            let slot = if x == SQRT_3 {
                0
            } else if x == -SQRT_3 {
                1
            } else {
                assert_eq!(x, 0.0);
                2
            };
            counts[slot] += 1;
        }
        assert!((counts[0] as f64 / 60_000.0 - 1.0 / 6.0).abs() < 0.01);
        assert!((counts[2] as f64 / 60_000.0 - 2.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn audit_rejects_small_samples() {
        assert!(moment_audit(EntryKind::GaussianReal, 9_999, 0).is_err());
    }

    #[test]
    fn audit_matches_analytic_moments() {
        for kind in EntryKind::ALL {
            let audit = moment_audit(kind, 200_000, 5).unwrap();
            for row in &audit.rows {
                assert!(
                    row.z_score.abs() < 5.0,
                    "{kind} order {}: z={}",
                    row.order,
                    row.z_score
                );
            }
        }
    }

    #[test]
    fn with_ratio_rounds() {
        let spec = EnsembleSpec::with_ratio(64, 2.0, EntryKind::GaussianReal, 0).unwrap();
        assert_eq!((spec.m, spec.n), (128, 64));
        assert!(EnsembleSpec::with_ratio(64, 0.5, EntryKind::GaussianReal, 0).is_err());
    }
}

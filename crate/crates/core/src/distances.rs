//! Distances between an empirical spectral distribution and the law.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SpectrumSample;
use crate::mp_law::{cached_classical_locations, ClassicalLocations, MpLaw};
use crate::summary::pairwise_sum;

/// Uniform probability on the eigenvalues of one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSpectralDistribution {
    values: Vec<f64>,
}

impl EmpiricalSpectralDistribution {
    /// Sorts the input; rejects empty or non-finite values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooFew {
                what: "eigenvalues",
                needed: 1,
                got: 0,
            });
        }
        let sample = SpectrumSample::new(values)?;
        Ok(Self {
            values: sample.into_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// `F(x) = #{λ_j ≤ x} / n`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }
}

impl From<&SpectrumSample> for EmpiricalSpectralDistribution {
    fn from(s: &SpectrumSample) -> Self {
        Self {
            values: s.as_slice().to_vec(),
        }
    }
}

/// Quantile panel boundaries `G⁻¹(k/n)`, k = 0..n, as angles. Reuses the
/// cached classical locations when the sizes agree.
fn panel_locations(esd: &EmpiricalSpectralDistribution, law: &MpLaw) -> Arc<ClassicalLocations> {
    if esd.len() == law.n() {
        cached_classical_locations(law)
    } else {
        let resized = MpLaw::new(law.m() * esd.len() / law.n().max(1), esd.len());
        match resized {
            Ok(same_ratio) if same_ratio.ratio() == law.ratio() => {
                cached_classical_locations(&same_ratio)
            }
            _ => Arc::new(locations_on_grid(law, esd.len())),
        }
    }
}

fn locations_on_grid(law: &MpLaw, k: usize) -> ClassicalLocations {
    let angles: Vec<f64> = (1..=k)
        .map(|j| law.quantile_angle(j as f64 / k as f64))
        .collect();
    ClassicalLocations::from_angles(*law, angles)
}

/// `W2² = Σ_j ∫_{γ_{j-1}}^{γ_j} (λ_j - x)² μ(x) dx`, the 1-D quantile
/// coupling written in the law's own variable so no quantile is evaluated
/// inside a panel.
pub fn w2_squared(esd: &EmpiricalSpectralDistribution, law: &MpLaw) -> Result<f64> {
    let loc = panel_locations(esd, law);
    let panels: Vec<f64> = esd
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let j = i + 1;
            law.integrate_mass(loc.angle(j - 1), loc.angle(j), |x| {
                (lambda - x) * (lambda - x)
            })
        })
        .collect();
    Ok(pairwise_sum(&panels).max(0.0))
}

/// `(2/n) Σ (λ_j - γ_j)² + (2/n) Σ (γ_j - γ_{j-1})²` with `γ_0 = a`.
pub fn w2_upper_bound(esd: &EmpiricalSpectralDistribution, law: &MpLaw) -> Result<f64> {
    let loc = panel_locations(esd, law);
    let n = esd.len() as f64;
    let fit: Vec<f64> = esd
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &l)| (l - loc.gamma(i + 1)).powi(2))
        .collect();
    Ok(2.0 / n * pairwise_sum(&fit) + gap_term(&loc))
}

/// `(2/n) Σ (γ_j - γ_{j-1})²`.
pub fn gap_term(loc: &ClassicalLocations) -> f64 {
    let n = loc.len();
    let gaps: Vec<f64> = (1..=n)
        .map(|j| (loc.gamma(j) - loc.gamma(j - 1)).powi(2))
        .collect();
    2.0 / n as f64 * pairwise_sum(&gaps)
}

/// `sup_x |F(x) - G(x)|`, attained at a jump of `F`.
pub fn kolmogorov_distance(esd: &EmpiricalSpectralDistribution, law: &MpLaw) -> Result<f64> {
    let n = esd.len() as f64;
    let mut sup: f64 = 0.0;
    let values = esd.as_slice();
    let mut j = 0;
    while j < values.len() {
        // ties jump together
        let mut k = j;
        while k + 1 < values.len() && values[k + 1] == values[j] {
            k += 1;
        }
        let g = law.cdf(values[j])?;
        sup = sup
            .max((j as f64 / n - g).abs())
            .max(((k + 1) as f64 / n - g).abs());
        j = k + 1;
    }
    Ok(sup.min(1.0))
}

/// One row of a distance study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub w2_squared: f64,
    pub w2_upper_bound: f64,
    pub kolmogorov: f64,
}

pub fn distance_row(spectrum: &SpectrumSample, law: &MpLaw) -> Result<DistanceRow> {
    let esd = EmpiricalSpectralDistribution::from(spectrum);
    Ok(DistanceRow {
        w2_squared: w2_squared(&esd, law)?,
        w2_upper_bound: w2_upper_bound(&esd, law)?,
        kolmogorov: kolmogorov_distance(&esd, law)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_spectrum, EnsembleSpec, EntryKind};
    use proptest::prelude::*;

    /// Independent W2 oracle: midpoint rule on the quantile representation.
    /// The edge behaviour `G⁻¹(p) ~ p^{2/3}` makes its error `O(h^{5/3})`.
    fn w2_oracle(values: &[f64], law: &MpLaw, per_panel: usize) -> f64 {
        let n = values.len();
        let mut acc = 0.0;
        for (i, &l) in values.iter().enumerate() {
            for s in 0..per_panel {
                let p = (i as f64 + (s as f64 + 0.5) / per_panel as f64) / n as f64;
                let q = law.quantile(p).unwrap();
                acc += (l - q).powi(2) / (n * per_panel) as f64;
            }
        }
        acc
    }

    #[test]
    fn single_atom_at_mean_gives_variance() {
        for m in [1, 3, 10] {
            let law = MpLaw::new(m, 1).unwrap();
            let esd = EmpiricalSpectralDistribution::new(vec![law.mean()]).unwrap();
            let w2 = w2_squared(&esd, &law).unwrap();
            assert!(
                (w2 - law.variance()).abs() < 1e-10 * law.variance(),
                "m={m}: {w2}"
            );
        }
    }

    #[test]
    fn agrees_with_midpoint_oracle() {
        let spec = EnsembleSpec::new(40, 20, EntryKind::GaussianComplex, 2).unwrap();
        let law = spec.law();
        let s = sample_spectrum(&spec, 0).unwrap();
        let got = w2_squared(&EmpiricalSpectralDistribution::from(&s), &law).unwrap();
        let coarse = w2_oracle(s.as_slice(), &law, 1600);
        let fine = w2_oracle(s.as_slice(), &law, 6400);
        let want = fine + (fine - coarse) / (4f64.powf(5.0 / 3.0) - 1.0);
        assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
    }

    #[test]
    fn classical_locations_as_atoms() {
        let law = MpLaw::new(200, 100).unwrap();
        let loc = law.classical_locations();
        let esd = EmpiricalSpectralDistribution::new(loc.as_slice().to_vec()).unwrap();
        let w2 = w2_squared(&esd, &law).unwrap();
        let bound = w2_upper_bound(&esd, &law).unwrap();
        assert!(w2 > 0.0);
        assert!((bound - gap_term(&loc)).abs() < 1e-15);
        assert!(w2 <= bound);
        // O(1/n²): n² · bound settles as n doubles
        let law2 = MpLaw::new(400, 200).unwrap();
        let bound2 = gap_term(&law2.classical_locations());
        let ratio = (bound2 * 200.0 * 200.0) / (bound * 100.0 * 100.0);
        assert!((0.8..1.25).contains(&ratio), "{ratio}");
        let dk = kolmogorov_distance(&esd, &law).unwrap();
        assert!(dk <= 1.0 / 100.0 + 1e-10, "{dk}");
    }

    #[test]
    fn atom_at_upper_edge() {
        let law = MpLaw::new(4, 1).unwrap();
        let esd = EmpiricalSpectralDistribution::new(vec![law.upper_edge()]).unwrap();
        assert!((kolmogorov_distance(&esd, &law).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gap_term_shrinks_with_n() {
        let small = gap_term(&MpLaw::new(128, 64).unwrap().classical_locations());
        let large = gap_term(&MpLaw::new(256, 128).unwrap().classical_locations());
        assert!(large < small);
    }

    #[test]
    fn esd_validation() {
        assert!(EmpiricalSpectralDistribution::new(vec![]).is_err());
        assert!(EmpiricalSpectralDistribution::new(vec![f64::NAN]).is_err());
        let e = EmpiricalSpectralDistribution::new(vec![2.0, 1.0]).unwrap();
        assert_eq!(e.cdf(1.5), 0.5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn sampled_spectra_respect_bound(seed in 0u64..10_000, n in 2usize..24, extra in 0usize..24) {
            let spec = EnsembleSpec::new(n + extra, n, EntryKind::GaussianComplex, seed).unwrap();
            let law = spec.law();
            let s = sample_spectrum(&spec, 0).unwrap();
            let row = distance_row(&s, &law).unwrap();
            prop_assert!(row.w2_squared > 0.0);
            prop_assert!(row.w2_squared <= row.w2_upper_bound * (1.0 + 1e-8));
            prop_assert!((0.0..=1.0).contains(&row.kolmogorov));
        }

        #[test]
        fn permutation_invariant(mut values in prop::collection::vec(0.0f64..6.0, 5), rot in 0usize..5) {
            let law = MpLaw::new(10, 5).unwrap();
            let a = w2_squared(&EmpiricalSpectralDistribution::new(values.clone()).unwrap(), &law).unwrap();
            values.rotate_left(rot);
            values.reverse();
            let b = w2_squared(&EmpiricalSpectralDistribution::new(values).unwrap(), &law).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

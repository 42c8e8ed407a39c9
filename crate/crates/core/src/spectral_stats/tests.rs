use proptest::prelude::*;

use super::*;
use crate::ensembles::EntryKind;

fn lue(n: usize, seed: u64) -> EnsembleSpec {
    EnsembleSpec::new(2 * n, n, EntryKind::GaussianComplex, seed).unwrap()
}

#[test]
fn counting_examples() {
    let s = SpectrumSample::new(vec![0.5, 1.0, 1.0, 2.0]).unwrap();
    assert_eq!(counting_function(&s, 0.1), 0);
    assert_eq!(counting_function(&s, 0.5), 1);
    assert_eq!(counting_function(&s, 1.0), 3);
    assert_eq!(counting_function(&s, 2.0), 4);
    assert_eq!(counting_function(&s, 9.0), 4);
}

#[test]
fn bulk_grid_layout() {
    let law = MpLaw::new(200, 100).unwrap();
    let grid = bulk_grid(&law);
    assert_eq!(grid.len(), 21);
    let delta = law.width() / 10.0;
    assert!((grid[0] - law.lower_edge() - delta).abs() < 1e-14);
    assert!((grid[20] - law.upper_edge() + delta).abs() < 1e-14);
    assert!(grid.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn bernstein_examples() {
    assert_eq!(bernstein_bound(0.0, 3.0).unwrap(), 1.0);
    assert_eq!(bernstein_bound(0.0, 0.0).unwrap(), 1.0);
    let v = bernstein_bound(1.0, 0.0).unwrap();
    assert!((v - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
    assert!((v - 0.7358).abs() < 1e-4);
    assert!(bernstein_bound(-1.0, 1.0).is_err());
    assert!(bernstein_bound(1.0, -1.0).is_err());
    assert!(bernstein_bound(f64::NAN, 1.0).is_err());
}

#[test]
fn one_by_one_chi_square_variance() {
    let spec = EnsembleSpec::new(1, 1, EntryKind::GaussianReal, 3).unwrap();
    let stats = eigenvalue_statistics(&spec, &[1], 40_000).unwrap();
    let s = &stats[0];
    assert!(
        (s.var_lambda - 2.0).abs() <= 4.0 * s.stderr_var,
        "{} ± {}",
        s.var_lambda,
        s.stderr_var
    );
    assert_eq!(s.scale, TailScale::Edge);
}

#[test]
fn profile_requires_replicas() {
    let spec = lue(8, 0);
    assert!(matches!(
        counting_profile(&spec, &[1.0], 99),
        Err(Error::TooFew { needed: 100, .. })
    ));
}

#[test]
fn profile_bernoulli_property_and_saturation() {
    let spec = lue(64, 21);
    let law = spec.law();
    let mut grid = bulk_grid(&law);
    grid.push(law.upper_edge() + 1.0);
    let profile = counting_profile(&spec, &grid, 400).unwrap();
    assert!(profile.bernoulli_violations(3.0).is_empty());
    let last = grid.len() - 1;
    assert_eq!(profile.mean_count[last], 64.0);
    assert_eq!(profile.var_count[last], 0.0);
    assert!(profile
        .mean_count
        .iter()
        .all(|&m| (0.0..=64.0).contains(&m)));
    for k in 1..grid.len() {
        let se = profile.mean_stderr[k].hypot(profile.mean_stderr[k - 1]);
        assert!(profile.mean_count[k] + 3.0 * se >= profile.mean_count[k - 1]);
    }
}

#[test]
fn bernstein_tail_check_holds_for_lue() {
    let spec = lue(32, 8);
    let law = spec.law();
    let spectra = sample_all(&spec, 600).unwrap();
    let u_grid: Vec<f64> = (0..=8).map(|k| k as f64 * 0.5).collect();
    let (c1, rows) = bernstein_check(&law, &spectra, &bulk_grid(&law), &u_grid).unwrap();
    assert!(c1 >= 0.0);
    for row in rows {
        assert!(row.frequency <= row.bound + 3.0 * row.stderr, "{row:?}");
    }
}

#[test]
fn classify_regimes() {
    assert_eq!(TailScale::classify(128, 64, 1.0), TailScale::Bulk);
    assert_eq!(TailScale::classify(128, 120, 1.0), TailScale::Intermediate);
    assert_eq!(TailScale::classify(128, 128, 1.0), TailScale::Edge);
    assert_eq!(TailScale::classify(128, 125, 1.0), TailScale::Edge);
}

#[test]
fn deviation_table_properties() {
    let spec = lue(64, 4);
    let law = spec.law();
    let spectra = sample_all(&spec, 800).unwrap();
    let grid = TailScale::Bulk.default_u_grid();
    let table = deviation_table(&law, &spectra, 32, TailScale::Bulk, &grid).unwrap();
    for row in &table.rows {
        assert!(row.bound >= row.frequency, "{row:?}");
        assert!((table.bound_at(row.u) - row.bound).abs() < 1e-15);
    }
    assert_eq!(table.rows.last().unwrap().frequency, 0.0);
    let slope = table.log_tail_slope().unwrap();
    assert!(slope < 0.0, "slope {slope}");
    assert!(deviation_table(&law, &spectra, 64, TailScale::Edge, &grid).is_err());

    // stderr scales as 1/sqrt(R)
    let quarter = deviation_table(&law, &spectra[..200], 32, TailScale::Bulk, &grid).unwrap();
    let k = 4;
    let ratio = quarter.rows[k].stderr / table.rows[k].stderr;
    assert!((1.5..2.6).contains(&ratio), "ratio {ratio}");
}

#[test]
fn intermediate_statistics_use_the_right_scale() {
    let spec = lue(64, 5);
    let stats = eigenvalue_statistics(&spec, &[58, 64], 50).unwrap();
    let law = spec.law();
    assert_eq!(stats[0].scale, TailScale::Intermediate);
    let want = 2.0 / (64f64.powf(2.0 / 3.0) * 6f64.cbrt());
    assert!((stats[0].tail[4].threshold - want).abs() < 1e-15);
    assert_eq!(stats[1].scale, TailScale::Edge);
    assert!((stats[1].tail[1].threshold - 0.01 * law.upper_edge()).abs() < 1e-15);
    assert!(eigenvalue_statistics(&spec, &[65], 50).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn counting_matches_linear_scan(
        values in prop::collection::vec(-5.0f64..5.0, 1..40),
        t in -6.0f64..6.0,
        pick in 0usize..40,
    ) {
        let s = SpectrumSample::new(values).unwrap();
        let scan = s.as_slice().iter().filter(|&&x| x <= t).count();
        prop_assert_eq!(counting_function(&s, t), scan);
        let at = s.as_slice()[pick % s.len()];
        let scan_at = s.as_slice().iter().filter(|&&x| x <= at).count();
        prop_assert_eq!(counting_function(&s, at), scan_at);
    }

    #[test]
    fn second_moment_dominates_variance(
        rows in prop::collection::vec(prop::collection::vec(0.0f64..4.0, 3), 3..30),
    ) {
        let law = MpLaw::new(6, 3).unwrap();
        let spectra: Vec<SpectrumSample> =
            rows.into_iter().map(|r| SpectrumSample::new(r).unwrap()).collect();
        let r = spectra.len() as f64;
        for j in 1..=3 {
            let stats = ReplicaStatistics::from_spectra(&law, &spectra, j, TailScale::Bulk, &[0.0]).unwrap();
            prop_assert!(stats.var_lambda >= 0.0);
            // biased variance: exact identity E(x-c)² = Var + (mean-c)²
            prop_assert!(stats.second_moment >= stats.var_lambda * (r - 1.0) / r * (1.0 - 1e-12));
        }
    }
}

use mp_spectra::harness::{CheckStatus, Harness};
use mp_spectra::{run_experiment, EntryKind, ExperimentConfig, ExperimentKind, ExperimentReport};

fn config(kind: ExperimentKind, n_list: Vec<usize>, replicas: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(kind, n_list);
    c.replicas = replicas;
    c.master_seed = 11;
    c
}

fn run(c: &ExperimentConfig) -> ExperimentReport {
    run_experiment(c).unwrap()
}

#[test]
fn variance_scan_tables_and_fits() {
    let report = run(&config(ExperimentKind::VarianceScan, vec![16, 32], 200));
    let main = report.table("variance_scan").unwrap();
    assert_eq!(main.rows.len(), 2);
    let j: Vec<_> = main
        .column("j")
        .unwrap()
        .into_iter()
        .map(Option::unwrap)
        .collect();
    assert_eq!(j, vec![8.0, 16.0]);
    assert!(report.table("variance_scan_tails").is_some());
    assert!(report.table("variance_scan_deviation").is_some());
    assert!(report.fit("raw_exponent").is_some());
    assert!(report.fit("log_corrected_exponent").is_some());
    assert!(report.check("normalized_spread").is_some());
    assert!(report.check("raw_exponent").is_some());
}

#[test]
fn single_size_skips_scaling_checks() {
    let report = run(&config(ExperimentKind::EdgeScan, vec![16], 50));
    assert_eq!(
        report.check("normalized_spread").unwrap().status,
        CheckStatus::Skipped
    );
    assert!(report.fits.is_empty());
}

#[test]
fn runs_are_reproducible_and_cache_independent() {
    let c = config(ExperimentKind::IntermediateScan, vec![27, 64], 60);
    let a = run(&c);
    let harness = Harness::new();
    let mut bigger = c.clone();
    bigger.replicas = 120;
    harness.run(&bigger).unwrap();
    let b = harness.run(&c).unwrap();
    assert_eq!(a.tables, b.tables);
    assert!(b.fresh_sampling_seconds < 0.5 * b.sampling_seconds);
}

#[test]
fn seed_changes_results() {
    let mut c = config(ExperimentKind::VarianceScan, vec![16], 50);
    let a = run(&c);
    c.master_seed = 12;
    let b = run(&c);
    assert_ne!(a.tables, b.tables);
}

#[test]
fn counting_scan_outputs() {
    let report = run(&config(ExperimentKind::CountingScan, vec![8, 16], 100));
    for name in [
        "counting_scan",
        "counting_scan_bernstein",
        "counting_scan_summary",
    ] {
        assert!(report.table(name).is_some(), "{name}");
    }
    assert_eq!(report.table("counting_scan").unwrap().rows.len(), 2 * 21);
    assert!(report.check("bernoulli_variance").unwrap().passed());
    assert!(report.check("bernstein_tail").unwrap().passed());
}

#[test]
fn interlace_outputs() {
    let mut c = config(ExperimentKind::InterlaceCheck, vec![8], 500);
    c.thresholds = Some(vec![0.5, 1.0, 2.0, 4.0]);
    let report = run(&c);
    assert_eq!(report.table("interlace_check").unwrap().rows.len(), 4);
    assert!(report.check("mean_difference").unwrap().passed());
    assert!(report.check("real_deviation").unwrap().passed());
    assert_eq!(report.excluded_replicas.len(), 3);
}

#[test]
fn w2_scan_outputs() {
    let report = run(&config(ExperimentKind::W2Scan, vec![16, 32], 40));
    assert_eq!(report.table("w2_scan").unwrap().rows.len(), 80);
    assert!(report.check("upper_bound").unwrap().passed());
    assert!(report.fit("upper_bound_exponent").is_some());
}

#[test]
fn locations_tables_per_size() {
    let report = run(&config(ExperimentKind::Locations, vec![10, 50], 1));
    assert_eq!(report.table("locations_n10").unwrap().rows.len(), 10);
    assert_eq!(report.table("locations_n50").unwrap().rows.len(), 50);
    assert!(report.all_passed());
}

#[test]
fn moment_audit_outputs() {
    let mut c = config(ExperimentKind::MomentAudit, vec![8], 200);
    c.entry_kind = EntryKind::MatchedDiscreteComplex;
    c.samples = 100_000;
    let report = run(&c);
    assert_eq!(report.table("moment_audit").unwrap().rows.len(), 8);
    assert!(report.all_passed(), "{:?}", report.checks);
}

#[test]
fn invalid_config_is_rejected_before_sampling() {
    let c = config(ExperimentKind::CountingScan, vec![8], 10);
    let err = run_experiment(&c).unwrap_err();
    assert!(err.to_string().contains("replicas"), "{err}");
}

#[test]
fn outputs_written_and_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(ExperimentKind::VarianceScan, vec![8, 16], 30);
    c.output = Some(dir.path().to_path_buf());
    let report = run(&c);
    let text = std::fs::read_to_string(dir.path().join("variance_scan_report.json")).unwrap();
    let back = ExperimentReport::from_json(&text).unwrap();
    assert_eq!(back.to_json(), report.to_json());
    let csv = std::fs::read_to_string(dir.path().join("variance_scan.csv")).unwrap();
    assert!(csv.starts_with("n,m,j,gamma_j,"));
}

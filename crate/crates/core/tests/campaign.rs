use std::fs;

use sorkin_core::campaign::{
    aggregate_campaign, analyze_raw_set, emit_results, read_summary, run_campaign,
    run_measurement_set, theory_orders, ExperimentConfig, Imperfections, RegimeSelection,
    SetResult,
};
use sorkin_core::stats::{mean, std_dev};
use sorkin_core::{PhaseGrid, Regime};

fn small(regime: RegimeSelection, sets: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::desk();
    c.regime = regime;
    c.sets = sets;
    c.photon.duration = 1.0;
    c.intensity.frames = 4;
    c.intensity.rows = 10;
    c.intensity.cols = 101;
    c
}

fn with_threads<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn set_has_all_entries_and_is_deterministic() {
    let config = small(RegimeSelection::Photon, 1);
    let a = run_measurement_set(&config, Regime::PhotonCorrelation, 0, None).unwrap();
    assert_eq!(a.visits.len(), 33);
    let labels: Vec<String> = a.visits.iter().map(|v| v.entry.label()).collect();
    assert!(labels.iter().any(|l| l == "ABCDE-2"));
    assert!(labels.iter().any(|l| l == "0"));
    let b = with_threads(1, || {
        run_measurement_set(&config, Regime::PhotonCorrelation, 0, None).unwrap()
    });
    assert_eq!(a, b);
}

#[test]
fn output_files_identical_across_thread_counts() {
    let config = small(RegimeSelection::Both, 3);
    let setup = config.interferometer().unwrap();
    let dirs: Vec<_> = [1, 4]
        .into_iter()
        .map(|n| {
            let dir = tempfile::tempdir().unwrap();
            let sets = with_threads(n, || run_campaign(&config, None).unwrap());
            let summary = aggregate_campaign(&sets, &setup).unwrap();
            emit_results(&summary, &sets, &setup, dir.path()).unwrap();
            dir
        })
        .collect();
    for f in [
        "sets.csv",
        "kappa.csv",
        "hierarchy_curves.csv",
        "summary.json",
    ] {
        let a = fs::read(dirs[0].path().join(f)).unwrap();
        let b = fs::read(dirs[1].path().join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}

#[test]
fn raw_files_reanalyze_to_the_same_result() {
    let config = small(RegimeSelection::Both, 2);
    let raw = tempfile::tempdir().unwrap();
    let sets = run_campaign(&config, Some(raw.path())).unwrap();
    for s in &sets {
        let again = analyze_raw_set(raw.path(), s.regime, s.set_index, &config).unwrap();
        assert_eq!(again.analysis, s.analysis);
        assert_eq!(again.alignment, s.alignment);
        assert_eq!(again.total_counts, s.total_counts);
    }
}

#[test]
fn summary_round_trip_and_curve_file() {
    let config = small(RegimeSelection::Intensity, 2);
    let setup = config.interferometer().unwrap();
    let sets = run_campaign(&config, None).unwrap();
    let summary = aggregate_campaign(&sets, &setup).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_results(&summary, &sets, &setup, dir.path()).unwrap();
    // A second write overwrites in place.
    emit_results(&summary, &sets, &setup, dir.path()).unwrap();
    assert_eq!(
        read_summary(&dir.path().join("summary.json")).unwrap(),
        summary
    );

    let curves = fs::read_to_string(dir.path().join("hierarchy_curves.csv")).unwrap();
    for m in 1..=2 {
        for n in 2..=5 {
            let deltas: Vec<f64> = curves
                .lines()
                .filter(|l| l.starts_with(&format!("theory,{m},{n},")))
                .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
                .collect();
            assert_eq!(deltas.len(), 1001, "M = {m}, N = {n}");
            assert!((deltas[0] + 3.0 * std::f64::consts::PI).abs() < 1e-12);
            assert!((deltas[1000] - 3.0 * std::f64::consts::PI).abs() < 1e-12);
        }
    }
    assert!(curves.lines().any(|l| l.starts_with("intensity,2,5,")));
}

#[test]
fn empty_campaign_is_rejected() {
    let config = small(RegimeSelection::Photon, 1);
    let setup = config.interferometer().unwrap();
    assert!(aggregate_campaign(&[], &setup).is_err());
    let sets = run_campaign(&config, None).unwrap();
    let summary = aggregate_campaign(&sets, &setup).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out");
    assert!(emit_results(&summary, &[], &setup, &target).is_err());
    assert!(!target.exists());
    let mut zero = config.clone();
    zero.sets = 0;
    assert!(run_campaign(&zero, None).is_err());
}

fn kappa2(sets: &[SetResult]) -> Vec<f64> {
    sets.iter().map(|s| s.analysis.kappa2.value).collect()
}

#[test]
fn ideal_sets_converge_to_theory() {
    let mut config = small(RegimeSelection::Intensity, 3);
    config.imperfections = Imperfections::none();
    config.intensity.frames = 25;
    config.intensity.rows = 40;
    let setup = config.interferometer().unwrap();
    let theory = theory_orders(&setup, &PhaseGrid::single(0.0).unwrap()).unwrap();
    for s in run_campaign(&config, None).unwrap() {
        let a = &s.analysis;
        let z = a.zero_index();
        for t in &theory {
            let o = a.order(t.order, t.slits).unwrap();
            let (v, sigma) = o.at(z);
            assert!(
                (v - t.normalized[0]).abs() < 5.0 * sigma,
                "set {} M = {} N = {}: {v} vs {} ± {sigma}",
                s.set_index,
                t.order,
                t.slits,
                t.normalized[0]
            );
        }
        let k = &a.kappa2;
        assert!(
            k.value.abs() < 3.0 * k.uncertainty,
            "{} ± {}",
            k.value,
            k.uncertainty
        );
    }
}

#[test]
fn misalignment_inflates_kappa_scatter() {
    let mut clean = small(RegimeSelection::Intensity, 16);
    clean.imperfections = Imperfections::none();
    let mut tilted = clean.clone();
    tilted.imperfections.misalignment_sigma = 2e-2;
    let a = kappa2(&run_campaign(&clean, None).unwrap());
    let b = kappa2(&run_campaign(&tilted, None).unwrap());
    let (sa, sb) = (std_dev(&a).unwrap(), std_dev(&b).unwrap());
    assert!(
        sb > 2.0 * sa,
        "scatter {sa:e} without, {sb:e} with misalignment"
    );
    assert!(mean(&b).abs() < 4.0 * sb / 4.0, "mean {:e}", mean(&b));
}

#[test]
fn drift_alone_passes_alignment() {
    let mut config = small(RegimeSelection::Intensity, 100);
    config.imperfections.misalignment_sigma = 0.0;
    config.intensity.frames = 1;
    config.intensity.rows = 4;
    let sets = run_campaign(&config, None).unwrap();
    let passed = sets.iter().filter(|s| s.alignment.passed).count();
    assert!(passed > 99, "{passed} of 100 sets passed");
}

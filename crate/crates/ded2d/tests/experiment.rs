use std::fs;

use ded2d::experiment::*;
use ded2d::sca::{self, Algorithm, AlgorithmOptions, Problem};
use ded2d::scenario::{generate_channels, ScenarioConfig};

fn small_spec() -> SweepSpec {
    let mut base = ScenarioConfig::calibrated();
    base.rng_seed = 3;
    SweepSpec {
        param: "p_b_max_dbm".into(),
        values: vec![15.0, 20.0],
        base,
        seeds: 2,
        algorithms: vec![Algorithm::Nota, Algorithm::OtaRandom],
        options: AlgorithmOptions::default(),
    }
}

#[test]
fn reports_round_trip_through_csv() {
    let spec = small_spec();
    let result = run_sweep_with_workers(&spec, 1).unwrap();
    assert_eq!(result.runs.len(), 2 * 2 * 2);
    let dir = tempfile::tempdir().unwrap();
    let files = emit_reports(&result, dir.path(), ThroughputUnit::BpsHz).unwrap();
    assert!(files.iter().all(|f| f.exists()));
    for name in ["summary.csv", "raw.csv", "manifest.json", "plot.py"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }

    let summary = read_summary_csv(&dir.path().join("summary.csv")).unwrap();
    let raw = read_raw_csv(&dir.path().join("raw.csv"), ThroughputUnit::BpsHz).unwrap();
    for p in result.summary(ThroughputUnit::BpsHz) {
        let key = (p.algorithm.name().to_string(), fmt_sig(p.value));
        let (feasible, mean, std) = summary[&key];
        assert_eq!(feasible, p.feasible);
        // Files carry twelve significant digits.
        assert!((mean - round_sig(p.mean)).abs() <= 1e-12 * p.mean.abs().max(1.0));
        assert!((std - round_sig(p.std)).abs() <= 1e-12 * p.std.abs().max(1.0));
        let xs = &raw[&key];
        assert_eq!(xs.len(), p.feasible);
        let (m, _) = mean_std(xs);
        assert!((m - p.mean).abs() <= 1e-10 * p.mean.abs().max(1.0));
    }

    for r in result.runs.iter().filter(|r| r.status == RunStatus::Ok) {
        let path = dir.path().join(trace_file_name(r.algorithm, r.value, r.seed));
        let text = fs::read_to_string(path).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRACE_COLUMNS.join(","));
        assert_eq!(text.lines().count(), r.trace.len() + 1);
    }
}

#[test]
fn manifest_hash_guards_the_sweep() {
    let result = run_sweep_with_workers(&SweepSpec { values: vec![20.0], seeds: 1, ..small_spec() }, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_reports(&result, dir.path(), ThroughputUnit::Nats).unwrap();
    let path = dir.path().join("manifest.json");
    let m = Manifest::load(&path).unwrap();
    assert_eq!(m.spec, result.spec);
    assert_eq!(m.seeds, vec![3]);
    assert_eq!(m.unit, ThroughputUnit::Nats);
    assert_eq!(m.config_hash, result.spec.config_hash());

    let tampered = fs::read_to_string(&path).unwrap().replacen("\"seeds\": 1", "\"seeds\": 2", 1);
    fs::write(&path, tampered).unwrap();
    assert!(Manifest::load(&path).is_err());
}

/// Replaying a manifest reproduces `raw.csv` and `summary.csv` byte for byte,
/// and every trace column except the timings.
#[test]
fn replay_from_manifest_is_bit_identical() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    emit_reports(&run_sweep_with_workers(&small_spec(), 1).unwrap(), first.path(), ThroughputUnit::BpsHz).unwrap();
    let m = Manifest::load(&first.path().join("manifest.json")).unwrap();
    let replay = run_sweep_with_workers(&m.spec, 2).unwrap();
    emit_reports(&replay, second.path(), m.unit).unwrap();
    for name in ["raw.csv", "summary.csv"] {
        assert_eq!(fs::read(first.path().join(name)).unwrap(), fs::read(second.path().join(name)).unwrap(), "{name}");
    }
    let strip = |text: String| text.lines().map(|l| l.split(',').take(6).collect::<Vec<_>>().join(",")).collect::<Vec<_>>();
    for r in replay.runs.iter().filter(|r| r.status == RunStatus::Ok) {
        let name = trace_file_name(r.algorithm, r.value, r.seed);
        let a = strip(fs::read_to_string(first.path().join(&name)).unwrap());
        let b = strip(fs::read_to_string(second.path().join(&name)).unwrap());
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn single_point_sweep_equals_a_direct_run() {
    let spec = SweepSpec { values: vec![20.0], seeds: 1, algorithms: vec![Algorithm::Ota], ..small_spec() };
    let rec = &run_sweep(&spec).unwrap().runs[0];
    let cfg = spec.config_at(20.0).unwrap();
    let ch = generate_channels(&cfg, 3).unwrap();
    let tr = sca::run(&Problem::new(&ch, &cfg).unwrap(), Algorithm::Ota, &AlgorithmOptions { seed: 3, ..Default::default() }).unwrap();
    assert_eq!(rec.throughput_nats, round_sig(tr.final_objective()));
    assert_eq!(rec.iterations, tr.iterations());
    assert_eq!(rec.trace.len(), tr.records.len());
}

/// A seed's result does not depend on which other seeds share the sweep.
#[test]
fn seeds_are_isolated() {
    let both = run_sweep(&SweepSpec { values: vec![20.0], ..small_spec() }).unwrap();
    let mut base = small_spec().base;
    base.rng_seed = 4;
    let alone = run_sweep(&SweepSpec { values: vec![20.0], seeds: 1, base, ..small_spec() }).unwrap();
    for r in &alone.runs {
        let twin = both.runs.iter().find(|b| b.seed == 4 && b.algorithm == r.algorithm).unwrap();
        assert_eq!(twin.throughput_nats.to_bits(), r.throughput_nats.to_bits());
    }
}

#[test]
fn traces_ascend_and_units_convert() {
    let result = run_sweep(&SweepSpec { values: vec![20.0], seeds: 1, ..small_spec() }).unwrap();
    for r in &result.runs {
        for w in r.trace.windows(2) {
            assert!(w[1].penalized >= w[0].penalized - 1e-6 * w[0].penalized.abs().max(1.0));
        }
        let bps = r.throughput(ThroughputUnit::BpsHz);
        assert!((bps - r.throughput_nats / std::f64::consts::LN_2).abs() <= 1e-10 * bps);
    }
}

#[test]
fn infeasible_instances_are_recorded_not_fatal() {
    let mut base = ScenarioConfig::default();
    base.rng_seed = 1;
    let spec = SweepSpec { param: "e_min_dbm".into(), values: vec![0.0], base, seeds: 1, algorithms: vec![Algorithm::Ota], options: AlgorithmOptions::default() };
    let result = run_sweep(&spec).unwrap();
    assert_eq!(result.runs[0].status, RunStatus::Infeasible);
    assert!(result.runs[0].throughput_nats.is_nan());
    let p = &result.summary(ThroughputUnit::BpsHz)[0];
    assert_eq!((p.feasible, p.seeds), (0, 1));
    assert!(p.mean.is_nan());
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(SweepSpec { param: "nope".into(), ..small_spec() }.validate().is_err());
    assert!(SweepSpec { values: vec![], ..small_spec() }.validate().is_err());
    assert!(SweepSpec { seeds: 0, ..small_spec() }.validate().is_err());
    assert!(SweepSpec { param: "K".into(), values: vec![1.5], ..small_spec() }.validate().is_err());
}

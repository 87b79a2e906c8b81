use std::fs;
use std::process::{Command, Output};

fn ded2d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ded2d")).args(args).output().expect("binary runs")
}

#[test]
fn run_prints_a_record_and_exits_zero() {
    let out = ded2d(&["run", "--algo", "ota", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rec: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rec["algorithm"], "ota");
    assert_eq!(rec["status"], "ok");
    let nats = rec["throughput_nats"].as_f64().unwrap();
    let bps = rec["throughput_bps_hz"].as_f64().unwrap();
    assert!(nats > 0.0 && (bps * std::f64::consts::LN_2 - nats).abs() < 1e-9 * nats);
}

#[test]
fn unreachable_energy_threshold_exits_two() {
    let out = ded2d(&["run", "--algo", "ota", "--seed", "1", "--profile", "strict"]);
    assert_eq!(out.status.code(), Some(2));
    let rec: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rec["status"], "infeasible");
}

#[test]
fn bad_arguments_fail() {
    assert_eq!(ded2d(&["run", "--set", "bogus=1"]).status.code(), Some(1));
    assert_eq!(ded2d(&["run", "--set", "K"]).status.code(), Some(1));
    assert_ne!(ded2d(&["run", "--algo", "greedy"]).status.code(), Some(0));
    assert_ne!(ded2d(&["sweep", "--out", "/tmp/unused"]).status.code(), Some(0));
}

#[test]
fn config_file_and_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.toml");
    fs::write(&cfg, "[power]\ne_min_dbm = -80.0\n\n[counts]\nnum_d2d_pairs = 1\n").unwrap();
    let out = ded2d(&["run", "--config", cfg.to_str().unwrap(), "--set", "N=4", "--algo", "nota", "--seed", "2", "--nats"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sweep_replays_from_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = ded2d(&[
        "sweep", "--param", "K", "--values", "1,2", "--seeds", "2", "--algos", "nota,ota-random", "--workers", "1", "--out", a.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("ota-random") && table.contains("mean bps_hz"));

    let manifest = a.join("manifest.json");
    let out = ded2d(&["sweep", "--manifest", manifest.to_str().unwrap(), "--workers", "2", "--out", b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["raw.csv", "summary.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert!(a.join("trace_nota_1_1.csv").exists());
    assert!(a.join("plot.py").exists());
}

#[test]
fn verify_passes() {
    let out = ded2d(&["verify"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 30);
    assert!(!text.contains("FAIL "));
}

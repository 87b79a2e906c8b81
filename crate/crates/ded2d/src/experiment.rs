//! Parameter sweeps over seeded channel realizations and their CSV reports.
//!
//! Every `(value, seed)` pair is an independent task. Channels for seed `s`
//! come from `generate_channels(cfg, s)` and the algorithm seed is `s` as well,
//! so a task's result depends only on its own inputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scenario::{generate_channels, ScenarioConfig, PARAM_NAMES};
use crate::sca::{self, Algorithm, AlgorithmOptions, IterRecord, Problem, RunTrace, Termination};

pub const MANIFEST_FORMAT: &str = "ded2d-manifest";

/// Parses, prints and rounds floats with 12 significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.11e}");
    // Keep plain notation for the usual magnitudes.
    let exp = x.abs().log10().floor() as i32;
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let plain = format!("{x:.decimals$}");
        if plain.contains('.') {
            return plain.trim_end_matches('0').trim_end_matches('.').to_string();
        }
        return plain;
    }
    s
}

pub fn round_sig(x: f64) -> f64 {
    fmt_sig(x).parse().unwrap_or(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThroughputUnit {
    #[default]
    BpsHz,
    Nats,
}

impl ThroughputUnit {
    pub fn column(self) -> &'static str {
        match self {
            ThroughputUnit::BpsHz => "bps_hz",
            ThroughputUnit::Nats => "nats",
        }
    }

    pub fn from_nats(self, v: f64) -> f64 {
        match self {
            ThroughputUnit::BpsHz => v / std::f64::consts::LN_2,
            ThroughputUnit::Nats => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// A name from [`PARAM_NAMES`].
    pub param: String,
    /// Ascending.
    pub values: Vec<f64>,
    /// Fixed parameters; the swept one is overwritten per point.
    pub base: ScenarioConfig,
    /// Seeds `base.rng_seed .. base.rng_seed + seeds`.
    pub seeds: usize,
    pub algorithms: Vec<Algorithm>,
    /// `seed` is replaced by the channel seed of each task.
    pub options: AlgorithmOptions,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !PARAM_NAMES.contains(&self.param.as_str()) {
            return Err(Error::InvalidConfig(format!("'{}' is not a sweepable parameter ({})", self.param, PARAM_NAMES.join(", "))));
        }
        if self.values.is_empty() || self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig("sweep values must be non-empty, distinct and ascending".into()));
        }
        if self.seeds == 0 {
            return Err(Error::InvalidConfig("at least one seed per point is required".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithms selected".into()));
        }
        self.options.validate()?;
        for &v in &self.values {
            self.config_at(v)?;
        }
        Ok(())
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.base.rng_seed.wrapping_add(i)).collect()
    }

    pub fn config_at(&self, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = self.base.clone();
        cfg.set_param(&self.param, value)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Infeasible,
    SolverFailure,
}

/// One algorithm on one `(value, seed)` task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub value: f64,
    pub seed: u64,
    pub status: RunStatus,
    /// Rounded to 12 significant digits, as written to `raw.csv`.
    pub throughput_nats: f64,
    pub iterations: usize,
    pub feas_rounds: usize,
    pub termination: Option<Termination>,
    pub projection_warning: bool,
    /// `min |θ_n|` before projection.
    pub relaxed_min_theta: f64,
    pub max_violation: f64,
    pub message: String,
    pub wall_secs: f64,
    pub trace: Vec<IterRecord>,
}

impl RunRecord {
    pub fn throughput(&self, unit: ThroughputUnit) -> f64 {
        round_sig(unit.from_nats(self.throughput_nats))
    }

    pub fn from_trace(algorithm: Algorithm, value: f64, seed: u64, tr: &RunTrace) -> Self {
        Self {
            algorithm,
            value,
            seed,
            status: RunStatus::Ok,
            throughput_nats: round_sig(tr.final_objective()),
            iterations: tr.iterations(),
            feas_rounds: tr.feas_rounds,
            termination: Some(tr.termination),
            projection_warning: tr.projection_warning,
            relaxed_min_theta: if tr.relaxed.theta.is_empty() { 1.0 } else { tr.relaxed.min_theta_modulus() },
            max_violation: tr.final_eval.max_violation(),
            message: String::new(),
            wall_secs: tr.wall_secs,
            trace: tr.records.clone(),
        }
    }

    fn failed(algorithm: Algorithm, value: f64, seed: u64, err: &Error, wall_secs: f64) -> Self {
        let status = match err {
            Error::Infeasible(_) => RunStatus::Infeasible,
            _ => RunStatus::SolverFailure,
        };
        Self {
            algorithm,
            value,
            seed,
            status,
            throughput_nats: f64::NAN,
            iterations: 0,
            feas_rounds: 0,
            termination: None,
            projection_warning: false,
            relaxed_min_theta: f64::NAN,
            max_violation: f64::NAN,
            message: err.to_string(),
            wall_secs,
            trace: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub algorithm: Algorithm,
    pub value: f64,
    pub seeds: usize,
    pub feasible: usize,
    /// Over feasible seeds; `NaN` when none.
    pub mean: f64,
    pub std: f64,
    pub mean_iterations: f64,
}

impl PointSummary {
    pub fn feasibility_rate(&self) -> f64 {
        self.feasible as f64 / self.seeds as f64
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Aggregates `runs` per `(algorithm, value)` in `unit`, in the order of
/// `algorithms` then ascending value.
pub fn summarize(runs: &[RunRecord], algorithms: &[Algorithm], values: &[f64], unit: ThroughputUnit) -> Vec<PointSummary> {
    let mut out = Vec::new();
    for &alg in algorithms {
        for &value in values {
            let group: Vec<&RunRecord> = runs.iter().filter(|r| r.algorithm == alg && r.value == value).collect();
            let ok: Vec<&RunRecord> = group.iter().copied().filter(|r| r.status == RunStatus::Ok).collect();
            let vals: Vec<f64> = ok.iter().map(|r| r.throughput(unit)).collect();
            let (mean, std) = mean_std(&vals);
            let iters: Vec<f64> = ok.iter().map(|r| r.iterations as f64).collect();
            out.push(PointSummary { algorithm: alg, value, seeds: group.len(), feasible: ok.len(), mean, std, mean_iterations: mean_std(&iters).0 });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// Ordered by value, seed, then algorithm as listed in the sweep spec.
    pub runs: Vec<RunRecord>,
    pub wall_secs: f64,
}

impl SweepResult {
    pub fn summary(&self, unit: ThroughputUnit) -> Vec<PointSummary> {
        summarize(&self.runs, &self.spec.algorithms, &self.spec.values, unit)
    }

    pub fn runs_for(&self, alg: Algorithm, value: f64) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(move |r| r.algorithm == alg && r.value == value)
    }
}

/// Runs one `(value, seed)` task for every algorithm of the sweep spec.
pub fn run_task(spec: &SweepSpec, value: f64, seed: u64) -> Vec<RunRecord> {
    let clock = Instant::now();
    let setup = spec.config_at(value).and_then(|cfg| {
        let ch = generate_channels(&cfg, seed)?;
        Ok((cfg, ch))
    });
    let (cfg, ch) = match setup {
        Ok(x) => x,
        Err(e) => return spec.algorithms.iter().map(|&a| RunRecord::failed(a, value, seed, &e, clock.elapsed().as_secs_f64())).collect(),
    };
    let prob = match Problem::new(&ch, &cfg) {
        Ok(p) => p,
        Err(e) => return spec.algorithms.iter().map(|&a| RunRecord::failed(a, value, seed, &e, 0.0)).collect(),
    };
    let opts = AlgorithmOptions { seed, ..spec.options.clone() };
    spec.algorithms
        .iter()
        .map(|&alg| {
            let t = Instant::now();
            match sca::run(&prob, alg, &opts) {
                Ok(tr) => RunRecord::from_trace(alg, value, seed, &tr),
                Err(e) => RunRecord::failed(alg, value, seed, &e, t.elapsed().as_secs_f64()),
            }
        })
        .collect()
}

/// Runs every `(value, seed)` task on the current rayon pool.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let clock = Instant::now();
    let tasks: Vec<(f64, u64)> = spec.values.iter().flat_map(|&v| spec.seed_list().into_iter().map(move |s| (v, s))).collect();
    let runs: Vec<RunRecord> = tasks.par_iter().flat_map_iter(|&(v, s)| run_task(spec, v, s)).collect();
    Ok(SweepResult { spec: spec.clone(), runs, wall_secs: clock.elapsed().as_secs_f64() })
}

/// Like [`run_sweep`] with a dedicated pool of `workers` threads.
pub fn run_sweep_with_workers(spec: &SweepSpec, workers: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep(spec))
}

pub const SUMMARY_COLUMNS: &[&str] = &["algorithm", "value", "seeds", "feasible", "feasibility_rate", "mean", "std", "mean_iterations"];
pub const RAW_COLUMNS: &[&str] = &[
    "algorithm", "value", "seed", "status", "throughput_bps_hz", "throughput_nats", "iterations", "feas_rounds",
    "termination", "projection_warning", "relaxed_min_theta", "max_violation",
];
pub const TRACE_COLUMNS: &[&str] = &["iter", "objective_nats", "penalized", "penalty", "min_theta", "max_violation", "sub1_secs", "sub2_secs"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub library_version: String,
    pub config_hash: String,
    pub spec: SweepSpec,
    pub seeds: Vec<u64>,
    pub unit: ThroughputUnit,
    pub columns: BTreeMap<String, Vec<String>>,
    pub wall_secs_total: f64,
    /// Keyed by `<algorithm>_<value>_<seed>`.
    pub wall_secs: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
        if m.format != MANIFEST_FORMAT {
            return Err(Error::Parse(format!("unexpected manifest format '{}'", m.format)));
        }
        if m.spec.config_hash() != m.config_hash {
            return Err(Error::Parse("manifest hash does not match its sweep spec".into()));
        }
        Ok(m)
    }
}

pub fn trace_file_name(alg: Algorithm, value: f64, seed: u64) -> String {
    format!("trace_{}_{}_{}.csv", alg.name(), fmt_sig(value), seed)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv(path: &Path, records: &[IterRecord]) -> Result<()> {
    let rows = records.iter().map(|r| {
        vec![
            r.iter.to_string(),
            fmt_sig(r.objective),
            fmt_sig(r.penalized),
            fmt_sig(r.penalty),
            fmt_sig(r.min_theta),
            fmt_sig(r.max_violation),
            fmt_sig(r.sub1_secs),
            fmt_sig(r.sub2_secs),
        ]
    });
    write_csv(path, TRACE_COLUMNS, rows)
}

fn status_name(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Ok => "ok",
        RunStatus::Infeasible => "infeasible",
        RunStatus::SolverFailure => "solver_failure",
    }
}

fn termination_name(t: Option<Termination>) -> &'static str {
    match t {
        Some(Termination::Converged) => "converged",
        Some(Termination::MaxIterations) => "max_iterations",
        Some(Termination::Stalled) => "stalled",
        None => "",
    }
}

/// Writes `summary.csv`, `raw.csv`, one trace per successful run,
/// `manifest.json` and `plot.py` into `dir`.
pub fn emit_reports(result: &SweepResult, dir: &Path, unit: ThroughputUnit) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let summary = result.summary(unit);
    let path = dir.join("summary.csv");
    write_csv(
        &path,
        SUMMARY_COLUMNS,
        summary.iter().map(|p| {
            vec![
                p.algorithm.name().to_string(),
                fmt_sig(p.value),
                p.seeds.to_string(),
                p.feasible.to_string(),
                fmt_sig(p.feasibility_rate()),
                fmt_sig(p.mean),
                fmt_sig(p.std),
                fmt_sig(p.mean_iterations),
            ]
        }),
    )?;
    written.push(path);

    let path = dir.join("raw.csv");
    write_csv(
        &path,
        RAW_COLUMNS,
        result.runs.iter().map(|r| {
            vec![
                r.algorithm.name().to_string(),
                fmt_sig(r.value),
                r.seed.to_string(),
                status_name(r.status).to_string(),
                fmt_sig(r.throughput(ThroughputUnit::BpsHz)),
                fmt_sig(r.throughput_nats),
                r.iterations.to_string(),
                r.feas_rounds.to_string(),
                termination_name(r.termination).to_string(),
                r.projection_warning.to_string(),
                fmt_sig(r.relaxed_min_theta),
                fmt_sig(r.max_violation),
            ]
        }),
    )?;
    written.push(path);

    for r in result.runs.iter().filter(|r| r.status == RunStatus::Ok) {
        let path = dir.join(trace_file_name(r.algorithm, r.value, r.seed));
        write_trace_csv(&path, &r.trace)?;
        written.push(path);
    }

    let columns = [("summary.csv", SUMMARY_COLUMNS), ("raw.csv", RAW_COLUMNS), ("trace_<algorithm>_<value>_<seed>.csv", TRACE_COLUMNS)]
        .iter()
        .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
        .collect();
    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        library_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: result.spec.config_hash(),
        spec: result.spec.clone(),
        seeds: result.spec.seed_list(),
        unit,
        columns,
        wall_secs_total: result.wall_secs,
        wall_secs: result.runs.iter().map(|r| (format!("{}_{}_{}", r.algorithm.name(), fmt_sig(r.value), r.seed), r.wall_secs)).collect(),
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))?)?;
    written.push(path);

    let path = dir.join("plot.py");
    fs::write(&path, plot_script(&result.spec.param, unit))?;
    written.push(path);
    Ok(written)
}

fn plot_script(param: &str, unit: ThroughputUnit) -> String {
    format!(
        r#"import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

curves = defaultdict(list)
with open("summary.csv") as f:
    for row in csv.DictReader(f):
        if row["mean"] not in ("NaN", "nan"):
            curves[row["algorithm"]].append((float(row["value"]), float(row["mean"]), float(row["std"])))

for alg, pts in sorted(curves.items()):
    pts.sort()
    plt.errorbar([p[0] for p in pts], [p[1] for p in pts], yerr=[p[2] for p in pts], marker="o", capsize=3, label=alg)
plt.xlabel("{param}")
plt.ylabel("max-min throughput ({unit})")
plt.legend()
plt.grid(True, alpha=0.3)
plt.savefig(sys.argv[1] if len(sys.argv) > 1 else "sweep.png", dpi=150, bbox_inches="tight")
"#,
        unit = unit.column()
    )
}

/// Reads `summary.csv` back as `(algorithm, value) → (feasible, mean, std)`.
pub fn read_summary_csv(path: &Path) -> Result<BTreeMap<(String, String), (usize, f64, f64)>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut out = BTreeMap::new();
    for row in r.records() {
        let row = row.map_err(csv_err)?;
        let num = |i: usize| row[i].parse::<f64>().map_err(|e| Error::Parse(format!("{}: {e}", &row[i])));
        let feasible = row[3].parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?;
        out.insert((row[0].to_string(), row[1].to_string()), (feasible, num(5)?, num(6)?));
    }
    Ok(out)
}

/// Reads `raw.csv` back as `(algorithm, value) → throughputs of successful runs` in `unit`.
pub fn read_raw_csv(path: &Path, unit: ThroughputUnit) -> Result<BTreeMap<(String, String), Vec<f64>>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let col = match unit {
        ThroughputUnit::BpsHz => 4,
        ThroughputUnit::Nats => 5,
    };
    let mut out: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for row in r.records() {
        let row = row.map_err(csv_err)?;
        let entry = out.entry((row[0].to_string(), row[1].to_string())).or_default();
        if &row[3] == "ok" {
            entry.push(row[col].parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(3.14159265358979), "3.14159265359");
        assert_eq!(fmt_sig(-0.000123456789012345), "-0.000123456789012");
        assert_eq!(fmt_sig(1.0e-7), "1.00000000000e-7");
        assert_eq!(round_sig(2.0 / 3.0), 0.666666666667);
    }
}

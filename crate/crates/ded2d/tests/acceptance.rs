//! Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
//! if any fails. Sweeps share their default point, so 21 distinct
//! configurations are solved.

use std::collections::HashMap;
use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use ded2d::experiment::{emit_reports, mean_std, run_sweep_with_workers, run_task, Manifest, RunRecord, RunStatus, SweepSpec, ThroughputUnit};
use ded2d::model::Scenario;
use ded2d::sca::{find_feasible, run, Algorithm, AlgorithmOptions, Problem};
use ded2d::scenario::{generate_channels, ScenarioConfig};
use ded2d::surrogate::SubproblemKind;
use ded2d::verify::{minorant_bounds, check_battery_case, max_min_sinr_oracle, socp_battery, template_checks, theta_block_ascent, theta_grid_oracle};

const SEEDS: u64 = 20;
const OPTIMIZED: [Algorithm; 2] = [Algorithm::Nota, Algorithm::Ota];

struct Line {
    id: usize,
    pass: bool,
    detail: String,
}

/// Runs per configuration and algorithm, so the default point is solved once.
struct Runs {
    cache: HashMap<(String, Algorithm), Vec<RunRecord>>,
}

impl Runs {
    fn get(&mut self, param: &str, value: f64, algorithms: &[Algorithm]) -> Vec<RunRecord> {
        let mut base = ScenarioConfig::calibrated();
        base.rng_seed = 1;
        let mut spec = SweepSpec { param: param.into(), values: vec![value], base, seeds: SEEDS as usize, algorithms: Vec::new(), options: AlgorithmOptions::default() };
        let cfg = serde_json::to_string(&spec.config_at(value).unwrap()).unwrap();
        spec.algorithms = algorithms.iter().copied().filter(|&a| !self.cache.contains_key(&(cfg.clone(), a))).collect();
        if !spec.algorithms.is_empty() {
            let runs: Vec<RunRecord> = spec.seed_list().into_iter().flat_map(|s| run_task(&spec, value, s)).collect();
            for &a in &spec.algorithms {
                self.cache.insert((cfg.clone(), a), runs.iter().filter(|r| r.algorithm == a).cloned().collect());
            }
        }
        algorithms.iter().flat_map(|&a| self.cache[&(cfg.clone(), a)].clone()).collect()
    }
}

fn ok_runs(runs: &[RunRecord], alg: Algorithm) -> Vec<&RunRecord> {
    runs.iter().filter(|r| r.algorithm == alg && r.status == RunStatus::Ok).collect()
}

fn surrogate_suite() -> Line {
    let clock = Instant::now();
    let cfg = ScenarioConfig::calibrated();
    let ch = generate_channels(&cfg, 1).unwrap();
    let prob = Problem::new(&ch, &cfg).unwrap();
    let (mut families, mut tight, mut viol, mut min_samples, mut failures) = (0, 0.0f64, f64::NEG_INFINITY, usize::MAX, Vec::new());
    for scenario in [Scenario::Nota, Scenario::Ota] {
        let start = find_feasible(&prob, scenario, &AlgorithmOptions { seed: 1, ..Default::default() }).unwrap();
        for kind in [SubproblemKind::block1(scenario), SubproblemKind::block2(scenario), SubproblemKind::feasibility(scenario)] {
            for c in template_checks(&prob, kind, &start.point, 1600, 17).unwrap() {
                families += 1;
                tight = tight.max(c.tightness);
                viol = viol.max(c.violation);
                min_samples = min_samples.min(c.samples);
                if c.tightness > 1e-9 || c.violation > 1e-9 || c.samples < 1000 {
                    failures.push(format!("{} {}", kind.name(), c.family));
                }
            }
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    Line {
        id: 1,
        pass: failures.is_empty() && secs < 60.0,
        detail: format!("{families} template families, tightness {tight:.1e}, worst violation {viol:.1e}, >= {min_samples} in-region samples each, {secs:.1}s {failures:?}"),
    }
}

fn scalar_minorants() -> Line {
    let rep = minorant_bounds(10_000, 1);
    Line {
        id: 2,
        pass: rep.max_violation <= 1e-12 && rep.max_equality_error <= 1e-12,
        detail: format!("{} tuples, max violation {:.1e}, equality error {:.1e}", rep.samples, rep.max_violation, rep.max_equality_error),
    }
}

fn ascent(base: &[RunRecord]) -> Line {
    let mut worst_drop = 0.0f64;
    let mut worst_viol = 0.0f64;
    let mut bad = Vec::new();
    for alg in OPTIMIZED {
        for r in ok_runs(base, alg) {
            let drop = r.trace.windows(2).map(|w| (w[0].penalized - w[1].penalized) / w[0].penalized.abs().max(1.0)).fold(0.0, f64::max);
            let v = r.trace.iter().map(|t| t.max_violation).fold(r.max_violation, f64::max);
            worst_drop = worst_drop.max(drop);
            worst_viol = worst_viol.max(v);
            if drop > 1e-6 || v > 1e-6 {
                bad.push(format!("{} seed {}", alg.name(), r.seed));
            }
        }
    }
    let counts: Vec<String> = OPTIMIZED.iter().map(|&a| format!("{} {}/{SEEDS}", a.name(), ok_runs(base, a).len())).collect();
    let mut infeasible: Vec<u64> = base.iter().filter(|r| r.status != RunStatus::Ok).map(|r| r.seed).collect();
    infeasible.dedup();
    Line {
        id: 3,
        pass: bad.is_empty() && OPTIMIZED.iter().all(|&a| !ok_runs(base, a).is_empty()),
        detail: format!("runs {}, worst relative drop {worst_drop:.1e}, worst violation {worst_viol:.1e}, unsolved seeds {infeasible:?}, offending runs {bad:?}", counts.join(", ")),
    }
}

fn convergence(base: &[RunRecord]) -> Line {
    let mut fast = 0;
    let mut wall = 0.0f64;
    for alg in OPTIMIZED {
        for r in ok_runs(base, alg) {
            wall = wall.max(r.wall_secs);
            let hit = r.trace.windows(2).take(50).any(|w| (w[1].penalized - w[0].penalized).abs() < 1e-3 * w[0].penalized.abs().max(1e-12));
            fast += hit as usize;
        }
    }
    let total = OPTIMIZED.len() * SEEDS as usize;
    let rate = fast as f64 / total as f64;
    Line { id: 4, pass: rate >= 0.9 && wall < 300.0, detail: format!("{fast}/{total} runs reach relative change < 1e-3 within 50 iterations ({:.0}%), slowest run {wall:.2}s", 100.0 * rate) }
}

fn unit_modulus(base: &[RunRecord]) -> Line {
    let total = OPTIMIZED.len() * SEEDS as usize;
    let mut near = 0;
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for alg in OPTIMIZED {
        for r in ok_runs(base, alg) {
            near += (r.relaxed_min_theta >= 0.99) as usize;
            worst = worst.max(r.max_violation);
            if r.projection_warning || r.max_violation > 1e-6 {
                bad.push(format!("{} seed {}", alg.name(), r.seed));
            }
        }
    }
    // Projected points are checked to be exactly unit modulus on one instance.
    let cfg = ScenarioConfig::calibrated();
    let ch = generate_channels(&cfg, 1).unwrap();
    let prob = Problem::new(&ch, &cfg).unwrap();
    let exact = OPTIMIZED.iter().all(|&a| {
        let tr = run(&prob, a, &AlgorithmOptions { seed: 1, ..Default::default() }).unwrap();
        tr.projected.as_ref().is_some_and(|p| p.theta.iter().all(|z| (z.norm() - 1.0).abs() <= 1e-15))
    });
    let rate = near as f64 / total as f64;
    Line {
        id: 5,
        pass: rate >= 0.9 && bad.is_empty() && exact,
        detail: format!("{near}/{total} relaxed runs with min|theta| >= 0.99, projected |theta| = 1: {exact}, worst post-projection violation {worst:.1e} {bad:?}"),
    }
}

/// Paired mean improvement of `opt` over `rnd` on seeds where both ran.
fn improvement(base: &[RunRecord], opt: Algorithm, rnd: Algorithm) -> (f64, f64, usize) {
    let mut pairs = Vec::new();
    for a in ok_runs(base, opt) {
        if let Some(b) = ok_runs(base, rnd).into_iter().find(|b| b.seed == a.seed) {
            pairs.push((a.throughput(ThroughputUnit::BpsHz), b.throughput(ThroughputUnit::BpsHz)));
        }
    }
    let n = pairs.len();
    let mo = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let mr = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    (mo, mr, n)
}

fn random_theta(base: &[RunRecord]) -> Line {
    let mut pass = true;
    let mut parts = Vec::new();
    for (opt, rnd) in [(Algorithm::Nota, Algorithm::NotaRandom), (Algorithm::Ota, Algorithm::OtaRandom)] {
        let (mo, mr, n) = improvement(base, opt, rnd);
        pass &= mo > mr;
        parts.push(format!("{} {mo:.4} vs {} {mr:.4} bps/Hz over {n} seeds (+{:.3}%)", opt.name(), rnd.name(), 100.0 * (mo - mr) / mr));
    }
    Line { id: 6, pass, detail: parts.join("; ") }
}

/// Mean curve over the seeds solved at every point, with per-point std.
fn curve(points: &[Vec<RunRecord>], alg: Algorithm) -> (Vec<f64>, Vec<f64>, usize) {
    let seeds: Vec<u64> = (1..=SEEDS).filter(|s| points.iter().all(|p| ok_runs(p, alg).iter().any(|r| r.seed == *s))).collect();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for p in points {
        let xs: Vec<f64> = ok_runs(p, alg).iter().filter(|r| seeds.contains(&r.seed)).map(|r| r.throughput(ThroughputUnit::BpsHz)).collect();
        let (m, s) = mean_std(&xs);
        means.push(m);
        stds.push(s);
    }
    (means, stds, seeds.len())
}

/// At most one step against `direction`, and that step within one std.
fn trend_ok(means: &[f64], stds: &[f64], direction: f64) -> bool {
    let mut against = 0;
    for i in 1..means.len() {
        let step = direction * (means[i] - means[i - 1]);
        if step < -1e-9 * means[i - 1].abs() {
            against += 1;
            if -step > stds[i].max(stds[i - 1]) {
                return false;
            }
        }
    }
    against <= 1 && means.iter().all(|m| m.is_finite())
}

fn trends(runs: &mut Runs) -> Line {
    let sweeps: [(&str, &[f64], f64); 5] = [
        ("p_b_max_dbm", &[10.0, 15.0, 20.0, 25.0], 1.0),
        ("r_k_min_bps", &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9], -1.0),
        ("K", &[1.0, 2.0, 3.0, 4.0], -1.0),
        ("N", &[5.0, 10.0, 20.0, 40.0], 1.0),
        ("M", &[2.0, 4.0, 6.0, 8.0], 1.0),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (param, values, direction) in sweeps {
        let points: Vec<Vec<RunRecord>> = values.iter().map(|&v| runs.get(param, v, &OPTIMIZED)).collect();
        for alg in OPTIMIZED {
            let (means, stds, n) = curve(&points, alg);
            let ok = trend_ok(&means, &stds, direction);
            pass &= ok;
            let shown: Vec<String> = means.iter().map(|m| format!("{m:.3}")).collect();
            parts.push(format!("{param} {} [{}] n={n} {}", alg.name(), shown.join(" "), if ok { "ok" } else { "BROKEN" }));
        }
    }
    Line { id: 7, pass, detail: parts.join("; ") }
}

fn oracles() -> Line {
    let mut cfg = ScenarioConfig::calibrated();
    cfg.set_param("N", 2.0).unwrap();
    let ch = generate_channels(&cfg, 3).unwrap();
    let prob = Problem::new(&ch, &cfg).unwrap();
    let opts = AlgorithmOptions { seed: 3, ..Default::default() };
    let start = find_feasible(&prob, Scenario::Nota, &opts).unwrap();
    let (_, ours) = theta_block_ascent(&prob, &start.point, &opts, 50).unwrap();
    let grid = theta_grid_oracle(&prob, &start.point, 360).unwrap().map(|g| g.0).unwrap_or(f64::NAN);
    let gap_a = (ours - grid).abs() / grid;

    let mut cfg = ScenarioConfig::calibrated();
    for (n, v) in [("K", 0.0), ("U_E", 0.0), ("N", 0.0)] {
        cfg.set_param(n, v).unwrap();
    }
    let ch = generate_channels(&cfg, 2).unwrap();
    let prob = Problem::new(&ch, &cfg).unwrap();
    let oracle = max_min_sinr_oracle(&ch, &cfg).unwrap();
    let alg = run(&prob, Algorithm::Nota, &AlgorithmOptions { seed: 2, ..Default::default() }).unwrap().final_objective();
    let gap_b = (alg - oracle.objective).abs() / oracle.objective;

    let battery = socp_battery();
    let solved = battery.iter().filter(|c| check_battery_case(c, 1e-6).0).count();
    Line {
        id: 8,
        pass: gap_a <= 0.02 && gap_b <= 0.01 && solved == battery.len() && battery.len() >= 10,
        detail: format!(
            "(a) phase grid gap {:.3}%, (b) SINR bisection gap {:.3}%, (c) {solved}/{} analytic SOCPs",
            100.0 * gap_a,
            100.0 * gap_b,
            battery.len()
        ),
    }
}

fn determinism() -> Line {
    let mut base = ScenarioConfig::calibrated();
    base.rng_seed = 1;
    let spec = SweepSpec { param: "N".into(), values: vec![5.0, 10.0], base, seeds: 3, algorithms: Algorithm::ALL.to_vec(), options: AlgorithmOptions::default() };
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    emit_reports(&run_sweep_with_workers(&spec, 1).unwrap(), first.path(), ThroughputUnit::BpsHz).unwrap();
    let m = Manifest::load(&first.path().join("manifest.json")).unwrap();
    emit_reports(&run_sweep_with_workers(&m.spec, 2).unwrap(), second.path(), m.unit).unwrap();
    let same = ["raw.csv", "summary.csv"].iter().all(|f| fs::read(first.path().join(f)).unwrap() == fs::read(second.path().join(f)).unwrap());
    Line { id: 9, pass: same, detail: format!("sweep replayed from manifest with a different worker count: raw.csv and summary.csv identical = {same}") }
}

fn main() -> ExitCode {
    let clock = Instant::now();
    let mut lines = vec![surrogate_suite(), scalar_minorants()];
    let mut runs = Runs { cache: HashMap::new() };
    let base = runs.get("p_b_max_dbm", 20.0, &Algorithm::ALL);
    lines.push(ascent(&base));
    lines.push(convergence(&base));
    lines.push(unit_modulus(&base));
    lines.push(random_theta(&base));
    lines.push(trends(&mut runs));
    lines.push(oracles());
    lines.push(determinism());
    for l in &lines {
        println!("criterion {}: {} ({})", l.id, if l.pass { "PASS" } else { "FAIL" }, l.detail);
    }
    let failed = lines.iter().filter(|l| !l.pass).count();
    println!("acceptance: {} of {} criteria pass, {:.0}s", lines.len() - failed, lines.len(), clock.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

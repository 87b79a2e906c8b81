//! Alternating inner-approximation drivers.
//!
//! Each outer iteration solves the block over `(w, v, p, τ)` at fixed `θ`,
//! then the block over `θ` at fixed `(w, v, p, τ)`. A block result replaces the
//! current iterate only if it is feasible for the exact model and does not
//! lower the penalized objective, so the ascent and feasibility invariants hold
//! even when a conic solve ends inexactly.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::conic::{self, lower::lower_subproblem, SolveStatus, SolverSettings};
use crate::error::{Error, Result};
use crate::model::{self, ChannelMaps, DesignPoint, ModelEval, Scenario};
use crate::scenario::{ChannelSet, ScenarioConfig, C64};
use crate::surrogate::{build_templates, SubproblemKind};

/// Target of the feasibility search; `μ` counts as one above this.
const MU_TARGET: f64 = 1.0 - 1e-6;
/// Slack on the ascent test for accepting a block result.
const ASCENT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmOptions {
    pub max_outer_iters: usize,
    /// Relative change of the penalized objective that ends the loop.
    pub convergence_tol: f64,
    pub feas_max_rounds: usize,
    pub conic_tol: f64,
    /// Seed for the initial point and the random reflection baselines.
    pub seed: u64,
    pub projection_enabled: bool,
    /// Strict-interior margin on the normalized trust-region cuts.
    pub trust_margin: f64,
}

impl Default for AlgorithmOptions {
    fn default() -> Self {
        Self {
            max_outer_iters: 100,
            convergence_tol: 1e-4,
            feas_max_rounds: 30,
            conic_tol: 1e-8,
            seed: 0,
            projection_enabled: true,
            trust_margin: 1e-6,
        }
    }
}

impl AlgorithmOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_outer_iters > 0
            && self.convergence_tol > 0.0
            && self.convergence_tol < 1.0
            && self.feas_max_rounds > 0
            && self.conic_tol > 0.0
            && self.trust_margin > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("algorithm options must be positive with convergence_tol < 1".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Algorithm {
    #[serde(rename = "nota")]
    Nota,
    #[serde(rename = "nota-random")]
    NotaRandom,
    #[serde(rename = "ota")]
    Ota,
    #[serde(rename = "ota-random")]
    OtaRandom,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Nota, Algorithm::NotaRandom, Algorithm::Ota, Algorithm::OtaRandom];

    pub fn scenario(self) -> Scenario {
        match self {
            Algorithm::Nota | Algorithm::NotaRandom => Scenario::Nota,
            Algorithm::Ota | Algorithm::OtaRandom => Scenario::Ota,
        }
    }

    pub fn random_theta(self) -> bool {
        matches!(self, Algorithm::NotaRandom | Algorithm::OtaRandom)
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Nota => "nota",
            Algorithm::NotaRandom => "nota-random",
            Algorithm::Ota => "ota",
            Algorithm::OtaRandom => "ota-random",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().replace('_', "-").as_str() {
            "nota" => Ok(Algorithm::Nota),
            "nota-random" => Ok(Algorithm::NotaRandom),
            "ota" => Ok(Algorithm::Ota),
            "ota-random" => Ok(Algorithm::OtaRandom),
            other => Err(Error::InvalidConfig(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    /// `min_i t_i R_i`.
    pub objective: f64,
    /// `objective + η·Ω`.
    pub penalized: f64,
    pub penalty: f64,
    pub min_theta: f64,
    pub max_violation: f64,
    pub sub1_secs: f64,
    pub sub2_secs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// Neither block produced an acceptable step.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub records: Vec<IterRecord>,
    pub eta: f64,
    pub feas_rounds: usize,
    pub initial: DesignPoint,
    /// Last iterate before projection.
    pub relaxed: DesignPoint,
    /// Projected point, when projection ran and restored feasibility.
    pub projected: Option<DesignPoint>,
    /// Evaluation of the reported point (projected when available).
    pub final_eval: ModelEval,
    pub termination: Termination,
    /// Set when projection was requested but the relaxed point is reported.
    pub projection_warning: bool,
    /// Diagnostics from rejected or failed block solves.
    pub notes: Vec<String>,
    pub wall_secs: f64,
}

impl RunTrace {
    pub fn final_point(&self) -> &DesignPoint {
        self.projected.as_ref().unwrap_or(&self.relaxed)
    }

    /// Max-min IU throughput of the reported point, nats/s/Hz.
    pub fn final_objective(&self) -> f64 {
        self.final_eval.objective
    }

    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// Relative change of the penalized objective at iteration `i ≥ 1`.
    pub fn relative_change(&self, i: usize) -> f64 {
        let (a, b) = (self.records[i - 1].penalized, self.records[i].penalized);
        (b - a).abs() / a.abs().max(1e-12)
    }
}

/// Shared, immutable inputs of one run.
pub struct Problem<'a> {
    pub ch: &'a ChannelSet,
    pub cfg: &'a ScenarioConfig,
    pub maps: ChannelMaps,
}

impl<'a> Problem<'a> {
    pub fn new(ch: &'a ChannelSet, cfg: &'a ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        ch.validate()?;
        let c = &cfg.counts;
        if (ch.m(), ch.n(), ch.num_ius(), ch.num_eus(), ch.num_pairs()) != (c.num_bs_antennas, c.num_irs_elements, c.num_ius, c.num_eus, c.num_d2d_pairs) {
            return Err(Error::Dimension("channels do not match the configured counts".into()));
        }
        Ok(Self { ch, cfg, maps: ChannelMaps::new(ch) })
    }

    pub fn evaluate(&self, x: &DesignPoint) -> Result<ModelEval> {
        model::evaluate(&self.maps, self.ch, x, self.cfg)
    }
}

/// Outcome of one block solve.
pub struct BlockResult {
    pub point: DesignPoint,
    pub eval: ModelEval,
    /// Optimal value of the lowered program.
    pub conic_objective: f64,
    /// `μ` of a feasibility solve.
    pub mu: Option<f64>,
    pub status: SolveStatus,
}

/// Builds, lowers and solves `kind` around `base`, retrying once with a
/// smaller trust margin when the program is reported infeasible or the solve
/// does not finish. Returns the decoded point and its exact evaluation.
pub fn solve_block(prob: &Problem, kind: SubproblemKind, base: &DesignPoint, eta: f64, opts: &AlgorithmOptions) -> Result<BlockResult> {
    let tpl = build_templates(kind, &prob.maps, prob.cfg, base, eta)?;
    let settings = SolverSettings { tol: opts.conic_tol, ..SolverSettings::default() };
    let mut last = None;
    for delta in [opts.trust_margin, opts.trust_margin / 10.0] {
        let low = lower_subproblem(&tpl, kind, delta)?;
        let sol = conic::solve_with(&low.program, &settings)?;
        match sol.status {
            SolveStatus::Optimal => {
                let point = tpl.layout.decode(&sol.x);
                let eval = prob.evaluate(&point)?;
                return Ok(BlockResult { point, eval, conic_objective: sol.objective, mu: low.mu.map(|m| sol.x[m]), status: sol.status });
            }
            status => last = Some((status, sol, low)),
        }
    }
    let (status, sol, low) = last.expect("at least one attempt");
    if status == SolveStatus::MaxIter && sol.x.iter().all(|v| v.is_finite()) {
        // The best iterate may still be usable; the caller checks it exactly.
        let point = tpl.layout.decode(&sol.x);
        if let Ok(eval) = prob.evaluate(&point) {
            return Ok(BlockResult { point, eval, conic_objective: sol.objective, mu: low.mu.map(|m| sol.x[m]), status });
        }
    }
    Err(Error::Solver(format!("{} ended with status {status:?}", kind.name())))
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Unit-modulus reflection vector with uniform phases.
pub fn random_unit_theta(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = stream(seed, 1);
    (0..n).map(|_| C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI))).collect()
}

/// Random start satisfying the time, power and reflection constraints, with
/// `τ = 2` (N-OTA) or `τ = 3` (OTA) in every slot.
pub fn initial_point(cfg: &ScenarioConfig, scenario: Scenario, seed: u64) -> DesignPoint {
    let c = &cfg.counts;
    let mut rng = stream(seed, 2);
    let frac = scenario.num_fractions();
    let tau = vec![frac as f64; frac];
    let beam = |rng: &mut ChaCha8Rng| -> Vec<C64> {
        (0..c.num_bs_antennas).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect()
    };
    let mut w: Vec<Vec<C64>> = (0..c.num_ius).map(|_| beam(&mut rng)).collect();
    let mut v: Vec<Vec<C64>> = (0..c.num_eus).map(|_| beam(&mut rng)).collect();
    let pb = cfg.p_b_max_mw();
    let budget = match scenario {
        Scenario::Nota => pb,
        Scenario::Ota => pb * (1.0 - 1.0 / tau[2]),
    };
    // Half the budget, and every beam at most half of P_B.
    let used = w.iter().map(|b| model::norm_sqr(b)).sum::<f64>() / tau[0] + v.iter().map(|b| model::norm_sqr(b)).sum::<f64>() / tau[1];
    let mut scale = (0.5 * budget / used).sqrt();
    for b in w.iter().chain(&v) {
        scale = scale.min((0.5 * pb / model::norm_sqr(b)).sqrt());
    }
    for b in w.iter_mut().chain(v.iter_mut()) {
        for z in b.iter_mut() {
            *z *= scale;
        }
    }
    let pk = cfg.p_k_max_mw();
    let p = (0..c.num_d2d_pairs).map(|_| pk * rng.gen_range(0.1..0.9)).collect();
    DesignPoint { w, v, p, tau, theta: random_unit_theta(c.num_irs_elements, seed) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleStart {
    pub point: DesignPoint,
    pub rounds: usize,
    /// `μ` after each round.
    pub mu_history: Vec<f64>,
}

/// Feasibility search at the fixed `θ` of `start`: repeatedly maximizes `μ`
/// (plus a small multiple of the max-min rate) where `μ` scales the energy and
/// D2D requirements, until `μ ≥ 1` and the exact model is feasible.
pub fn find_feasible_from(prob: &Problem, start: &DesignPoint, opts: &AlgorithmOptions) -> Result<FeasibleStart> {
    let kind = SubproblemKind::feasibility(start.scenario());
    let mut x = start.clone();
    let mut mu_history = Vec::new();
    let mut best_mu = f64::NEG_INFINITY;
    for round in 1..=opts.feas_max_rounds {
        let res = match solve_block(prob, kind, &x, 0.0, opts) {
            Ok(r) => r,
            Err(e) => return Err(Error::Infeasible(format!("feasibility solve failed in round {round} (best mu {best_mu:.6}): {e}"))),
        };
        let mu = res.mu.unwrap_or(f64::NEG_INFINITY);
        mu_history.push(mu);
        best_mu = best_mu.max(mu);
        let done = mu >= MU_TARGET && res.eval.is_feasible();
        x = res.point;
        if done {
            return Ok(FeasibleStart { point: x, rounds: round, mu_history });
        }
        // A stalled μ will not reach one.
        if round >= 3 && mu < MU_TARGET {
            let prev = mu_history[round - 3];
            if mu - prev < 1e-6 * prev.abs().max(1.0) {
                break;
            }
        }
    }
    Err(Error::Infeasible(format!("feasibility search stopped with best mu {best_mu:.6}")))
}

/// Feasibility search from the seeded random start of `scenario`.
pub fn find_feasible(prob: &Problem, scenario: Scenario, opts: &AlgorithmOptions) -> Result<FeasibleStart> {
    find_feasible_from(prob, &initial_point(prob.cfg, scenario, opts.seed), opts)
}

/// Penalty weight matching the magnitude of the initial objective:
/// `−f(x⁰)/Ω(θ⁰)`, or `f(x⁰)` when `Ω(θ⁰) = 0`.
pub fn select_eta(x0: &DesignPoint, prob: &Problem) -> Result<f64> {
    let eval = prob.evaluate(x0)?;
    Ok(eta_from(eval.objective, eval.penalty))
}

pub fn eta_from(min_rate: f64, omega: f64) -> f64 {
    if omega < 0.0 {
        -min_rate / omega
    } else {
        min_rate
    }
}

/// Accepts `cand` over the current point if it is exactly feasible and does
/// not lower the penalized objective.
fn accept(cand: &BlockResult, current: f64, eta: f64) -> std::result::Result<(), String> {
    if !cand.eval.is_feasible() {
        return Err(format!("exact violation {:.3e}", cand.eval.max_violation()));
    }
    let f = cand.eval.penalized(eta);
    if f < current - ASCENT_SLACK * current.abs().max(1.0) {
        return Err(format!("objective decreased from {current:.12} to {f:.12}"));
    }
    Ok(())
}

fn record(iter: usize, x: &DesignPoint, eval: &ModelEval, eta: f64, t1: f64, t2: f64) -> IterRecord {
    IterRecord {
        iter,
        objective: eval.objective,
        penalized: eval.penalized(eta),
        penalty: eval.penalty,
        min_theta: if x.theta.is_empty() { 1.0 } else { x.min_theta_modulus() },
        max_violation: eval.max_violation(),
        sub1_secs: t1,
        sub2_secs: t2,
    }
}

/// Runs `algorithm` from the seeded feasible start.
pub fn run(prob: &Problem, algorithm: Algorithm, opts: &AlgorithmOptions) -> Result<RunTrace> {
    opts.validate()?;
    let clock = Instant::now();
    let start = find_feasible(prob, algorithm.scenario(), opts)?;
    let mut trace = iterate(prob, algorithm, start.point, opts)?;
    trace.feas_rounds = start.rounds;
    trace.wall_secs = clock.elapsed().as_secs_f64();
    Ok(trace)
}

/// Alternating optimization for the N-OTA scenario.
pub fn run_nota(ch: &ChannelSet, cfg: &ScenarioConfig, opts: &AlgorithmOptions) -> Result<RunTrace> {
    run(&Problem::new(ch, cfg)?, Algorithm::Nota, opts)
}

/// Alternating optimization for the OTA scenario.
pub fn run_ota(ch: &ChannelSet, cfg: &ScenarioConfig, opts: &AlgorithmOptions) -> Result<RunTrace> {
    run(&Problem::new(ch, cfg)?, Algorithm::Ota, opts)
}

/// Baseline with random unit-modulus reflection held fixed; only the
/// `(w, v, p, τ)` block is optimized.
pub fn run_random_theta(ch: &ChannelSet, cfg: &ScenarioConfig, opts: &AlgorithmOptions, scenario: Scenario) -> Result<RunTrace> {
    let alg = match scenario {
        Scenario::Nota => Algorithm::NotaRandom,
        Scenario::Ota => Algorithm::OtaRandom,
    };
    run(&Problem::new(ch, cfg)?, alg, opts)
}

/// Outer loop from a feasible start.
pub fn iterate(prob: &Problem, algorithm: Algorithm, start: DesignPoint, opts: &AlgorithmOptions) -> Result<RunTrace> {
    let scenario = algorithm.scenario();
    let optimize_theta = !algorithm.random_theta() && !start.theta.is_empty();
    let mut x = start.clone();
    let mut eval = prob.evaluate(&x)?;
    if !eval.is_feasible() {
        return Err(Error::Infeasible(format!("start violates constraints by {:.3e}", eval.max_violation())));
    }
    let eta = if optimize_theta { eta_from(eval.objective, eval.penalty) } else { 0.0 };
    let mut records = vec![record(0, &x, &eval, eta, 0.0, 0.0)];
    let mut notes = Vec::new();
    let mut termination = Termination::MaxIterations;

    for iter in 1..=opts.max_outer_iters {
        let f_old = eval.penalized(eta);
        let mut moved = false;

        let t = Instant::now();
        match solve_block(prob, SubproblemKind::block1(scenario), &x, eta, opts) {
            Ok(res) => match accept(&res, eval.penalized(eta), eta) {
                Ok(()) => {
                    x = res.point;
                    eval = res.eval;
                    moved = true;
                }
                Err(why) => notes.push(format!("iter {iter} block 1 rejected: {why}")),
            },
            Err(e) => notes.push(format!("iter {iter} block 1 failed: {e}")),
        }
        let t1 = t.elapsed().as_secs_f64();

        let t = Instant::now();
        if optimize_theta {
            match solve_block(prob, SubproblemKind::block2(scenario), &x, eta, opts) {
                Ok(res) => match accept(&res, eval.penalized(eta), eta) {
                    Ok(()) => {
                        x = res.point;
                        eval = res.eval;
                        moved = true;
                    }
                    Err(why) => notes.push(format!("iter {iter} block 2 rejected: {why}")),
                },
                Err(e) => notes.push(format!("iter {iter} block 2 failed: {e}")),
            }
        }
        let t2 = t.elapsed().as_secs_f64();

        records.push(record(iter, &x, &eval, eta, t1, t2));
        if !moved {
            termination = Termination::Stalled;
            break;
        }
        let f_new = eval.penalized(eta);
        if (f_new - f_old).abs() < opts.convergence_tol * f_old.abs().max(1e-12) {
            termination = Termination::Converged;
            break;
        }
    }

    let mut trace = RunTrace {
        algorithm,
        records,
        eta,
        feas_rounds: 0,
        initial: start,
        relaxed: x.clone(),
        projected: None,
        final_eval: eval.clone(),
        termination,
        projection_warning: false,
        notes,
        wall_secs: 0.0,
    };
    if optimize_theta && opts.projection_enabled {
        match project_unit_modulus_with(prob, &x, eta, opts) {
            Ok((p, e)) => {
                trace.projected = Some(p);
                trace.final_eval = e;
            }
            Err(e) => {
                trace.projection_warning = true;
                trace.notes.push(format!("projection failed: {e}"));
            }
        }
    }
    Ok(trace)
}

/// Rescales every `θ_n` to unit modulus, then re-solves the `(w, v, p, τ)`
/// block once at the projected `θ` so all constraints hold.
pub fn project_unit_modulus(x: &DesignPoint, ch: &ChannelSet, cfg: &ScenarioConfig, scenario: Scenario) -> Result<DesignPoint> {
    if x.scenario() != scenario {
        return Err(Error::Dimension("design point does not match the scenario".into()));
    }
    let prob = Problem::new(ch, cfg)?;
    project_unit_modulus_with(&prob, x, 0.0, &AlgorithmOptions::default()).map(|(p, _)| p)
}

fn project_unit_modulus_with(prob: &Problem, x: &DesignPoint, eta: f64, opts: &AlgorithmOptions) -> Result<(DesignPoint, ModelEval)> {
    if x.theta.iter().any(|z| z.norm() == 0.0) {
        return Err(Error::Degenerate("cannot project a zero reflection coefficient".into()));
    }
    let mut proj = x.clone();
    // Entries already on the unit circle stay bit-identical.
    for z in proj.theta.iter_mut() {
        let r = z.norm();
        if (r - 1.0).abs() > 4.0 * f64::EPSILON {
            *z /= r;
        }
    }
    let scenario = x.scenario();
    let block1 = SubproblemKind::block1(scenario);
    let polish = |from: &DesignPoint| -> Option<(DesignPoint, ModelEval)> {
        let res = solve_block(prob, block1, from, eta, opts).ok()?;
        res.eval.is_feasible().then_some((res.point, res.eval))
    };
    if let Some(out) = polish(&proj) {
        return Ok(out);
    }
    // Restore feasibility at the projected θ first, then polish.
    let start = find_feasible_from(prob, &proj, opts)?;
    if let Some(out) = polish(&start.point) {
        return Ok(out);
    }
    let eval = prob.evaluate(&start.point)?;
    Ok((start.point, eval))
}

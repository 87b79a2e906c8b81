//! Self-checks shared by the test suites and `ded2d verify`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::conic::lower::TAU_MAX;
use crate::conic::{self, cdot, CExpr, ConicProgram, LinExpr, SolveStatus};
use crate::error::{Error, Result};
use crate::model::{penalty_omega, ChannelMaps, DesignPoint, Scenario};
use crate::sca::{eta_from, find_feasible, run, solve_block, Algorithm, AlgorithmOptions, Problem};
use crate::scenario::{generate_channels, ChannelSet, ScenarioConfig, C64};
use crate::surrogate::{build_templates, lb_log1p_ratio, lb_log1p_ratio_over_t, lb_penalty, lb_square, Layout, SubproblemKind, SubproblemTemplates};

/// Expected outcome of a battery problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expected {
    /// Optimal objective (maximization sense).
    Optimum(f64),
    Infeasible,
    Unbounded,
}

pub struct BatteryCase {
    pub name: &'static str,
    pub program: ConicProgram,
    pub expected: Expected,
}

fn v(i: usize) -> LinExpr {
    LinExpr::var(i)
}

fn c(k: f64) -> LinExpr {
    LinExpr::constant(k)
}

/// Small SOCPs with closed-form answers.
pub fn socp_battery() -> Vec<BatteryCase> {
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut out = Vec::new();

    // max −x s.t. ‖(1,1)‖ ≤ x
    let mut p = ConicProgram::new();
    let x = p.add_var("x");
    p.set_objective(LinExpr::term(x, -1.0));
    p.add_soc("norm", v(x), vec![c(1.0), c(1.0)]);
    out.push(BatteryCase { name: "norm of constant", program: p, expected: Expected::Optimum(-sqrt2) });

    // min u + v s.t. 2uv ≥ 2
    let mut p = ConicProgram::new();
    let (u, w) = (p.add_var("u"), p.add_var("v"));
    p.set_objective(LinExpr { terms: vec![(u, -1.0), (w, -1.0)], constant: 0.0 });
    p.add_rotated("hyp", v(u), v(w), vec![c(sqrt2)]);
    out.push(BatteryCase { name: "rotated cone", program: p, expected: Expected::Optimum(-2.0) });

    // max x + y s.t. x + 2y ≤ 4, 3x + y ≤ 6, x, y ≥ 0
    let mut p = ConicProgram::new();
    let (x, y) = (p.add_var("x"), p.add_var("y"));
    p.set_objective(&v(x) + &v(y));
    p.add_nonneg("r1", LinExpr { terms: vec![(x, -1.0), (y, -2.0)], constant: 4.0 });
    p.add_nonneg("r2", LinExpr { terms: vec![(x, -3.0), (y, -1.0)], constant: 6.0 });
    p.add_bounds(x, Some(0.0), None);
    p.add_bounds(y, Some(0.0), None);
    out.push(BatteryCase { name: "linear program", program: p, expected: Expected::Optimum(2.8) });

    // max x + y s.t. ‖(x−1, y−2)‖ ≤ 1
    let mut p = ConicProgram::new();
    let (x, y) = (p.add_var("x"), p.add_var("y"));
    p.set_objective(&v(x) + &v(y));
    p.add_soc("disk", c(1.0), vec![&v(x) + -1.0, &v(y) + -2.0]);
    out.push(BatteryCase { name: "linear over disk", program: p, expected: Expected::Optimum(3.0 + sqrt2) });

    // distance from (3,−1) to the line x + y = 0
    let mut p = ConicProgram::new();
    let (x, y, t) = (p.add_var("x"), p.add_var("y"), p.add_var("t"));
    p.set_objective(LinExpr::term(t, -1.0));
    p.add_eq("line", &v(x) + &v(y));
    p.add_soc("dist", v(t), vec![&v(x) + -3.0, &v(y) + 1.0]);
    out.push(BatteryCase { name: "projection onto line", program: p, expected: Expected::Optimum(-sqrt2) });

    // max x − x²
    let mut p = ConicProgram::new();
    let x = p.add_var("x");
    let q = p.add_epigraph("sq", &conic::ConvexQuadratic { lin: LinExpr::zero(), squares: vec![v(x)] });
    p.set_objective(&v(x) - &q);
    out.push(BatteryCase { name: "concave quadratic", program: p, expected: Expected::Optimum(0.25) });

    // min x s.t. x·y ≥ 1, y ≤ 4
    let mut p = ConicProgram::new();
    let (x, y) = (p.add_var("x"), p.add_var("y"));
    p.set_objective(LinExpr::term(x, -1.0));
    p.add_hyperbolic("xy", v(x), v(y));
    p.add_bounds(y, None, Some(4.0));
    out.push(BatteryCase { name: "hyperbolic", program: p, expected: Expected::Optimum(-0.25) });

    // min t s.t. t ≥ x²/y, x = 2, y ≤ 2
    let mut p = ConicProgram::new();
    let (x, y, t) = (p.add_var("x"), p.add_var("y"), p.add_var("t"));
    p.set_objective(LinExpr::term(t, -1.0));
    p.add_eq("fix x", &v(x) + -2.0);
    p.add_rotated("qol", v(t), v(y).scale(0.5), vec![v(x)]);
    p.add_bounds(y, None, Some(2.0));
    out.push(BatteryCase { name: "quadratic over linear", program: p, expected: Expected::Optimum(-2.0) });

    // max Σx s.t. ‖x‖ ≤ 1 in five dimensions
    let mut p = ConicProgram::new();
    let xs: Vec<usize> = (0..5).map(|i| p.add_var(format!("x{i}"))).collect();
    p.set_objective(LinExpr { terms: xs.iter().map(|&i| (i, 1.0)).collect(), constant: 0.0 });
    p.add_soc("ball", c(1.0), xs.iter().map(|&i| v(i)).collect());
    out.push(BatteryCase { name: "ball in R5", program: p, expected: Expected::Optimum(5f64.sqrt()) });

    // max x s.t. ‖(x, y)‖ ≤ 2, y = 1
    let mut p = ConicProgram::new();
    let (x, y) = (p.add_var("x"), p.add_var("y"));
    p.set_objective(v(x));
    p.add_eq("fix y", &v(y) + -1.0);
    p.add_soc("circle", c(2.0), vec![v(x), v(y)]);
    out.push(BatteryCase { name: "chord of circle", program: p, expected: Expected::Optimum(3f64.sqrt()) });

    // x ≥ 1 and x ≤ 0
    let mut p = ConicProgram::new();
    let x = p.add_var("x");
    p.set_objective(v(x));
    p.add_bounds(x, Some(1.0), Some(0.0));
    out.push(BatteryCase { name: "infeasible box", program: p, expected: Expected::Infeasible });

    // max x s.t. x ≥ 0
    let mut p = ConicProgram::new();
    let x = p.add_var("x");
    p.set_objective(v(x));
    p.add_bounds(x, Some(0.0), None);
    out.push(BatteryCase { name: "unbounded ray", program: p, expected: Expected::Unbounded });

    out
}

/// Solves one battery case and reports `(passed, observed objective or NaN)`.
pub fn check_battery_case(case: &BatteryCase, tol: f64) -> (bool, f64) {
    let sol = match conic::solve(&case.program, 1e-9) {
        Ok(s) => s,
        Err(_) => return (false, f64::NAN),
    };
    let ok = match case.expected {
        Expected::Optimum(want) => {
            sol.status == SolveStatus::Optimal && (sol.objective - want).abs() <= tol * (1.0 + want.abs())
        }
        Expected::Infeasible => sol.status == SolveStatus::Infeasible,
        Expected::Unbounded => sol.status == SolveStatus::Unbounded,
    };
    (ok, sol.objective)
}

/// Worst relative gaps of the scalar minorants over random positive tuples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MinorantReport {
    pub samples: usize,
    /// Largest `bound − exact` over all samples and families.
    pub max_violation: f64,
    /// Largest `|bound − exact|` at the expansion point.
    pub max_equality_error: f64,
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Checks `ln(1+x/y)`, `ln(1+x/y)/t`, `x²` and the penalty minorants on
/// `samples` random tuples drawn log-uniformly from `[1e-3, 1e3]`.
pub fn minorant_bounds(samples: usize, seed: u64) -> MinorantReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = MinorantReport { samples, ..Default::default() };
    let note = |bound: f64, exact: f64, rep: &mut MinorantReport| {
        rep.max_violation = rep.max_violation.max((bound - exact) / exact.abs().max(1.0));
    };
    for _ in 0..samples {
        let [x, y, t, xb, yb, tb] = std::array::from_fn(|_| log_uniform(&mut rng, 1e-3, 1e3));
        let t = t.max(1.0);
        let tb = tb.max(1.0);
        let f = (x / y).ln_1p();
        note(lb_log1p_ratio(x, y, xb, yb).unwrap_or(f64::INFINITY), f, &mut rep);
        note(lb_log1p_ratio_over_t(x, y, t, xb, yb, tb).unwrap_or(f64::INFINITY), f / t, &mut rep);
        note(lb_square(x, xb), x * x, &mut rep);

        let fb = (xb / yb).ln_1p();
        let e1 = (lb_log1p_ratio(xb, yb, xb, yb).unwrap_or(f64::NAN) - fb).abs();
        let e2 = (lb_log1p_ratio_over_t(xb, yb, tb, xb, yb, tb).unwrap_or(f64::NAN) - fb / tb).abs();
        let e3 = (lb_square(xb, xb) - xb * xb).abs() / (xb * xb).max(1.0);
        rep.max_equality_error = rep.max_equality_error.max(e1).max(e2).max(e3);

        let n = rng.gen_range(1..6);
        let theta: Vec<C64> = (0..n).map(|_| C64::from_polar(rng.gen_range(0.0..1.0), rng.gen_range(0.0..TAU))).collect();
        let bar: Vec<C64> = (0..n).map(|_| C64::from_polar(rng.gen_range(0.05..1.0), rng.gen_range(0.0..TAU))).collect();
        if let (Ok(lb), Ok(exact)) = (lb_penalty(&theta, &bar), penalty_omega(&theta)) {
            note(lb, exact, &mut rep);
        }
        if let (Ok(lb), Ok(exact)) = (lb_penalty(&bar, &bar), penalty_omega(&bar)) {
            rep.max_equality_error = rep.max_equality_error.max((lb - exact).abs());
        }
    }
    rep
}

/// Tightness and minorization of one family of templates of one subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateCheck {
    pub kind: SubproblemKind,
    pub family: &'static str,
    pub templates: usize,
    /// Largest `|template − exact| / max(|exact|, 1)` at the expansion point.
    pub tightness: f64,
    /// Largest `(template − exact) / max(|exact|, 1)` over the samples.
    pub violation: f64,
    /// Samples that landed inside every trust region.
    pub samples: usize,
}

/// Exact quantities each family of templates bounds from below.
struct Exact {
    iu: Vec<f64>,
    d2d: Vec<f64>,
    energy: Vec<f64>,
    omega: f64,
}

fn exact_at(prob: &Problem, tpl: &SubproblemTemplates, x: &[f64]) -> Result<Exact> {
    let point = tpl.layout.decode(x);
    let eval = prob.evaluate(&point)?;
    let tau_e = point.tau[1];
    let to_norm = tau_e / (prob.cfg.power.rho * prob.maps.noise_power_mw);
    Ok(Exact {
        iu: eval.iu_throughput.clone(),
        d2d: eval.d2d_throughput.clone(),
        energy: eval.eu_energy_mw.iter().map(|e| e * to_norm).collect(),
        omega: if point.theta.is_empty() { 0.0 } else { penalty_omega(&point.theta).unwrap_or(f64::NAN) },
    })
}

/// Family values `(family, template values, exact values)` at `x`.
fn family_values(tpl: &SubproblemTemplates, ex: &Exact, x: &[f64]) -> Vec<(&'static str, Vec<f64>, Vec<f64>)> {
    let mut out = vec![("iu rate", tpl.iu.iter().map(|t| t.value(x)).collect(), ex.iu.clone())];
    if !tpl.d2d.is_empty() {
        out.push(("d2d rate", tpl.d2d.iter().map(|ts| ts.iter().map(|t| t.value(x)).sum()).collect(), ex.d2d.clone()));
    }
    if !tpl.energy.is_empty() {
        out.push(("energy", tpl.energy.iter().map(|e| e.value(x)).collect(), ex.energy.clone()));
    }
    if let Some(p) = &tpl.penalty {
        out.push(("penalty", vec![p.value(x)], vec![ex.omega]));
    }
    out
}

fn in_region(tpl: &SubproblemTemplates, x: &[f64]) -> bool {
    let rates = tpl.iu.iter().chain(tpl.d2d.iter().flatten());
    let recip_ok = rates.clone().all(|t| t.recip.eval(x) > 0.0);
    let cut_ok = rates.filter_map(|t| t.cut.as_ref()).all(|c| c.expr.eval(x) > 0.0);
    let pen_ok = tpl.penalty.as_ref().is_none_or(|p| p.denom.eval(x) > 0.0);
    let tau_ok = tpl.layout.tau_slots.iter().all(|&s| x[s] >= 1.0);
    recip_ok && cut_ok && pen_ok && tau_ok
}

fn perturb(lay: &Layout, x0: &[f64], scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = x0.to_vec();
    let gauss = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };
    for &(re, im) in lay.w_slots.iter().chain(&lay.v_slots).flatten().chain(&lay.theta_slots) {
        let mag = x0[re].hypot(x0[im]) + 0.02;
        x[re] += scale * mag * gauss(rng);
        x[im] += scale * mag * gauss(rng);
    }
    for &s in &lay.p_slots {
        x[s] = x0[s] * (scale * gauss(rng)).exp();
    }
    for &s in &lay.tau_slots {
        x[s] = (x0[s] * (scale * gauss(rng)).exp()).max(1.0);
    }
    x
}

/// Tightness at `base` and minorization on up to `samples` random points
/// around it, for every template family of `kind`.
pub fn template_checks(prob: &Problem, kind: SubproblemKind, base: &DesignPoint, samples: usize, seed: u64) -> Result<Vec<TemplateCheck>> {
    let tpl = build_templates(kind, &prob.maps, prob.cfg, base, 1.0)?;
    let x0 = tpl.layout.encode_base(tpl.program.num_vars());
    let ex0 = exact_at(prob, &tpl, &x0)?;
    let mut checks: Vec<TemplateCheck> = family_values(&tpl, &ex0, &x0)
        .into_iter()
        .map(|(family, vals, exact)| TemplateCheck {
            kind,
            family,
            templates: vals.len(),
            tightness: vals.iter().zip(&exact).map(|(v, e)| (v - e).abs() / e.abs().max(1.0)).fold(0.0, f64::max),
            violation: f64::NEG_INFINITY,
            samples: 0,
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scales = [0.01, 0.05, 0.2, 0.5];
    for i in 0..samples {
        let x = perturb(&tpl.layout, &x0, scales[i % scales.len()], &mut rng);
        if !in_region(&tpl, &x) {
            continue;
        }
        let ex = exact_at(prob, &tpl, &x)?;
        for (check, (_, vals, exact)) in checks.iter_mut().zip(family_values(&tpl, &ex, &x)) {
            let worst = vals.iter().zip(&exact).map(|(v, e)| (v - e) / e.abs().max(1.0)).fold(f64::NEG_INFINITY, f64::max);
            check.violation = check.violation.max(worst);
            check.samples += 1;
        }
    }
    Ok(checks)
}

/// Best feasible max-min throughput over a `steps × steps` grid of the two
/// phases of an `N = 2` reflection vector, other variables fixed at `x`.
pub fn theta_grid_oracle(prob: &Problem, x: &DesignPoint, steps: usize) -> Result<Option<(f64, Vec<C64>)>> {
    if x.theta.len() != 2 {
        return Err(Error::Dimension("the phase grid needs N = 2".into()));
    }
    let mut best: Option<(f64, Vec<C64>)> = None;
    let mut y = x.clone();
    for a in 0..steps {
        for b in 0..steps {
            let phase = |k: usize| TAU * k as f64 / steps as f64;
            y.theta = vec![C64::from_polar(1.0, phase(a)), C64::from_polar(1.0, phase(b))];
            let eval = prob.evaluate(&y)?;
            if eval.is_feasible() && best.as_ref().is_none_or(|(f, _)| eval.objective > *f) {
                best = Some((eval.objective, y.theta.clone()));
            }
        }
    }
    Ok(best)
}

/// Repeats the reflection block alone from `x` until the penalized objective
/// settles, then rescales `θ` to unit modulus. Returns the final point and
/// its max-min throughput.
pub fn theta_block_ascent(prob: &Problem, x: &DesignPoint, opts: &AlgorithmOptions, max_iters: usize) -> Result<(DesignPoint, f64)> {
    let kind = SubproblemKind::block2(x.scenario());
    let mut cur = x.clone();
    let mut eval = prob.evaluate(&cur)?;
    let eta = eta_from(eval.objective, eval.penalty);
    for _ in 0..max_iters {
        let res = match solve_block(prob, kind, &cur, eta, opts) {
            Ok(r) => r,
            Err(_) => break,
        };
        let (old, new) = (eval.penalized(eta), res.eval.penalized(eta));
        if !res.eval.is_feasible() || new < old - 1e-9 * old.abs().max(1.0) {
            break;
        }
        cur = res.point;
        eval = res.eval;
        if (new - old).abs() < 1e-7 * old.abs().max(1e-12) {
            break;
        }
    }
    for z in cur.theta.iter_mut() {
        *z /= z.norm();
    }
    let eval = prob.evaluate(&cur)?;
    Ok((cur, eval.objective))
}

/// Global optimum of the max-min SINR problem without EUs, D2D pairs or IRS.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrOracle {
    /// Information time fraction at the optimum.
    pub t_i: f64,
    pub gamma: f64,
    /// `t_i·ln(1 + γ)`, nats/s/Hz.
    pub objective: f64,
    pub w: Vec<Vec<C64>>,
}

/// Least total power `Σ‖w_i‖²` (in units of `power`) reaching SINR `gamma` on
/// every channel row with `‖w_i‖² ≤ beam_cap·power`, or `None` when infeasible.
fn min_power_for_sinr(h: &[Vec<C64>], power: f64, beam_cap: f64, gamma: f64) -> Result<Option<(f64, Vec<Vec<C64>>)>> {
    let u = h.len();
    let m = h[0].len();
    let sp = power.sqrt();
    // Rows scaled to unit size; the noise term shrinks by the same factor.
    let scale = h.iter().map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).fold(0.0, f64::max) * sp;
    let mut prog = ConicProgram::new();
    let w: Vec<Vec<CExpr>> = (0..u)
        .map(|i| {
            (0..m)
                .map(|a| {
                    let (re, im) = prog.add_complex_var(&format!("w[{i}][{a}]"));
                    CExpr::var(re, im, 1.0)
                })
                .collect()
        })
        .collect();
    let j = C64::new(0.0, 1.0);
    for i in 0..u {
        let coefs: Vec<C64> = h[i].iter().map(|z| z * (sp / scale)).collect();
        let sig = cdot(&coefs, &w[i]);
        prog.add_eq(format!("phase {i}"), sig.re_mul_conj(j));
        let mut rows = Vec::new();
        for (l, wl) in w.iter().enumerate() {
            if l != i {
                let z = cdot(&coefs, wl);
                rows.push(z.re_mul_conj(C64::new(1.0, 0.0)));
                rows.push(z.re_mul_conj(j));
            }
        }
        rows.push(LinExpr::constant(1.0 / scale));
        prog.add_soc(format!("sinr {i}"), sig.re_mul_conj(C64::new(1.0, 0.0)).scale(1.0 / gamma.sqrt()), rows);
    }
    for (i, b) in w.iter().enumerate() {
        let comps = b.iter().flat_map(|e| [e.re_mul_conj(C64::new(1.0, 0.0)), e.re_mul_conj(j)]).collect();
        prog.add_soc(format!("beam cap {i}"), LinExpr::constant(beam_cap.sqrt()), comps);
    }
    let z = prog.add_var("power");
    let comps: Vec<LinExpr> = w.iter().flatten().flat_map(|e| [e.re_mul_conj(C64::new(1.0, 0.0)), e.re_mul_conj(j)]).collect();
    prog.add_rotated("power epigraph", LinExpr::var(z), LinExpr::constant(0.5), comps);
    prog.set_objective(LinExpr::term(z, -1.0));
    let sol = conic::solve(&prog, 1e-8)?;
    let usable = sol.status == SolveStatus::MaxIter && sol.primal_residual.max(sol.dual_residual).max(sol.gap) < 1e-6;
    match sol.status {
        _ if usable => {
            let beams = w.iter().map(|b| b.iter().map(|e| e.eval(&sol.x) * sp).collect()).collect();
            Ok(Some((sol.x[z], beams)))
        }
        SolveStatus::Optimal => {
            let beams = w.iter().map(|b| b.iter().map(|e| e.eval(&sol.x) * sp).collect()).collect();
            Ok(Some((sol.x[z], beams)))
        }
        // Near the boundary the solve may not certify either way; such a
        // level counts as not reached.
        SolveStatus::Infeasible | SolveStatus::MaxIter => Ok(None),
        s => Err(Error::Solver(format!("SINR feasibility at gamma {gamma:.4e} ended with {s:?}"))),
    }
}

/// Bisection on the common SINR for an instance with `K = 0`, `U_E = 0`,
/// `N = 0`, maximized over a grid of information time fractions up to
/// `1 − 1/τ_max`. With `P_B` spent over `t_i`, the transmit power is `P_B/t_i`
/// and each beam stays below `P_B`.
pub fn max_min_sinr_oracle(ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<SinrOracle> {
    if ch.num_pairs() != 0 || ch.num_eus() != 0 || ch.n() != 0 {
        return Err(Error::Dimension("the SINR oracle needs K = 0, U_E = 0 and N = 0".into()));
    }
    let h: Vec<Vec<C64>> = ChannelMaps::new(ch).at(&[]).iu;
    let t_max = 1.0 - 1.0 / TAU_MAX;
    let mut best: Option<SinrOracle> = None;
    for t_i in (5..10).map(|k| k as f64 / 10.0).chain([t_max]) {
        let power = cfg.p_b_max_mw() / t_i;
        let cap = t_i;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while min_power_for_sinr(&h, power, cap, hi)?.is_some_and(|(p, _)| p <= 1.0) {
            lo = hi;
            hi *= 4.0;
            if hi > 1e16 {
                return Err(Error::Degenerate("unbounded SINR".into()));
            }
        }
        let mut w = None;
        for _ in 0..100 {
            if hi / lo.max(1e-300) < 1.0 + 1e-7 {
                break;
            }
            let mid = if lo > 0.0 { (lo * hi).sqrt() } else { hi / 2.0 };
            match min_power_for_sinr(&h, power, cap, mid)? {
                Some((p, beams)) if p <= 1.0 => {
                    lo = mid;
                    w = Some(beams);
                }
                _ => hi = mid,
            }
        }
        let objective = t_i * lo.ln_1p();
        if best.as_ref().is_none_or(|b| objective > b.objective) {
            best = Some(SinrOracle { t_i, gamma: lo, objective, w: w.unwrap_or_default() });
        }
    }
    best.ok_or_else(|| Error::Degenerate("no time fraction evaluated".into()))
}

/// Outcome of one self-check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> CheckOutcome {
    CheckOutcome { name: name.into(), passed, detail: detail.into() }
}

/// Conic battery, minorant properties, template checks on a default instance
/// and the two small-instance oracles.
pub fn run_all() -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    for case in socp_battery() {
        let (ok, obj) = check_battery_case(&case, 1e-6);
        out.push(outcome(format!("conic: {}", case.name), ok, format!("objective {obj:.9}")));
    }

    let rep = minorant_bounds(10_000, 7);
    out.push(outcome(
        "minorants: scalar bounds",
        rep.max_violation <= 1e-12 && rep.max_equality_error <= 1e-12,
        format!("max violation {:.2e}, equality error {:.2e}", rep.max_violation, rep.max_equality_error),
    ));

    let cfg = ScenarioConfig::calibrated();
    let templates = generate_channels(&cfg, 1).and_then(|ch| {
        let prob = Problem::new(&ch, &cfg)?;
        let mut checks = Vec::new();
        for scenario in [Scenario::Nota, Scenario::Ota] {
            let start = find_feasible(&prob, scenario, &AlgorithmOptions { seed: 1, ..Default::default() })?;
            for kind in [SubproblemKind::block1(scenario), SubproblemKind::block2(scenario), SubproblemKind::feasibility(scenario)] {
                checks.extend(template_checks(&prob, kind, &start.point, 200, 11)?);
            }
        }
        Ok(checks)
    });
    match templates {
        Ok(checks) => {
            for c in checks {
                out.push(outcome(
                    format!("templates: {} {}", c.kind.name(), c.family),
                    c.tightness <= 1e-9 && c.violation <= 1e-9 && c.samples > 0,
                    format!("tightness {:.2e}, violation {:.2e} over {} samples", c.tightness, c.violation, c.samples),
                ));
            }
        }
        Err(e) => out.push(outcome("templates", false, e.to_string())),
    }

    let grid = (|| -> Result<CheckOutcome> {
        let mut cfg = ScenarioConfig::calibrated();
        cfg.counts.num_irs_elements = 2;
        let ch = generate_channels(&cfg, 3)?;
        let prob = Problem::new(&ch, &cfg)?;
        let opts = AlgorithmOptions { seed: 3, ..Default::default() };
        let start = find_feasible(&prob, Scenario::Nota, &opts)?;
        let (_, ours) = theta_block_ascent(&prob, &start.point, &opts, 50)?;
        let (best, _) = theta_grid_oracle(&prob, &start.point, 360)?.ok_or_else(|| Error::Infeasible("no feasible grid point".into()))?;
        let gap = (ours - best).abs() / best;
        Ok(outcome("oracle: N = 2 phase grid", gap <= 0.02, format!("block {ours:.6} vs grid {best:.6} nats ({:.3}%)", 100.0 * gap)))
    })();
    out.push(grid.unwrap_or_else(|e| outcome("oracle: N = 2 phase grid", false, e.to_string())));

    let sinr = (|| -> Result<CheckOutcome> {
        let mut cfg = ScenarioConfig::calibrated();
        cfg.counts.num_d2d_pairs = 0;
        cfg.counts.num_eus = 0;
        cfg.counts.num_irs_elements = 0;
        let ch = generate_channels(&cfg, 2)?;
        let prob = Problem::new(&ch, &cfg)?;
        let oracle = max_min_sinr_oracle(&ch, &cfg)?;
        let trace = run(&prob, Algorithm::Nota, &AlgorithmOptions { seed: 2, ..Default::default() })?;
        let gap = (trace.final_objective() - oracle.objective).abs() / oracle.objective;
        Ok(outcome(
            "oracle: max-min SINR bisection",
            gap <= 0.01,
            format!("algorithm {:.6} vs oracle {:.6} nats ({:.3}%)", trace.final_objective(), oracle.objective, 100.0 * gap),
        ))
    })();
    out.push(sinr.unwrap_or_else(|e| outcome("oracle: max-min SINR bisection", false, e.to_string())));
    out
}

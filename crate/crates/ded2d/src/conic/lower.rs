//! Lowering of surrogate templates to conic programs.
//!
//! Shapes used:
//! - each reciprocal `1/L` becomes an auxiliary `u` with `u·L ≥ 1`;
//! - each interference quadratic becomes a rotated-cone epigraph;
//! - `1/τ` terms become auxiliaries `r` with `r·τ ≥ 1`, and the time budget is `Σr ≤ 1`;
//! - `Σ‖w‖²/τ` budgets are rotated cones on the scaled beamformers;
//! - the max-min objective is an epigraph variable below every IU template.
//!
//! With `M` antennas, `U_I`, `U_E` users and `K` pairs, the N-OTA block-1
//! program has `2M(U_I+U_E) + K + 2` design variables plus one auxiliary per
//! reciprocal, epigraph and time term. The block-2 program has `2N` design
//! variables plus the same kind of auxiliaries.

use super::{ConicProgram, LinExpr};
use crate::error::{Error, Result};
use crate::model::Scenario;
use crate::surrogate::{RateTemplate, SubproblemKind, SubproblemTemplates};

/// Upper bound on every `τ`, i.e. a floor of `1e-4` on each time fraction.
pub const TAU_MAX: f64 = 1e4;
/// Weight of the IU epigraph in the feasibility objective.
pub const FEAS_RATE_WEIGHT: f64 = 1e-3;

/// A lowered subproblem together with the slots needed to read it back.
#[derive(Debug, Clone)]
pub struct Lowered {
    pub program: ConicProgram,
    /// Max-min epigraph variable.
    pub s: usize,
    pub mu: Option<usize>,
}

/// Lowers a rate template to the affine `a + 2b − b·u − b·q − c·τ`, which
/// lower-bounds the template on the feasible set of the added cones.
fn lower_rate(prog: &mut ConicProgram, t: &RateTemplate, delta: f64) -> LinExpr {
    let c = &t.coeffs;
    let u = prog.add_var(format!("recip[{}]", t.label));
    prog.add_hyperbolic(format!("{} reciprocal", t.label), LinExpr::var(u), t.recip.clone());
    if t.cut.is_some() {
        prog.add_nonneg(format!("{} trust region", t.label), &t.recip + (-delta));
    }
    let q = prog.add_epigraph(&format!("{} interference", t.label), &t.psi);
    let mut e = LinExpr::constant(c.a + 2.0 * c.b);
    e = e.add_scaled(&LinExpr::var(u), -c.b);
    e = e.add_scaled(&q, -c.b);
    if c.c != 0.0 {
        e = e.add_scaled(&t.tau, -c.c);
    }
    e
}

/// Lowers one subproblem. `delta` is the strict-interior margin on every
/// normalized trust-region cut.
pub fn lower_subproblem(tpl: &SubproblemTemplates, kind: SubproblemKind, delta: f64) -> Result<Lowered> {
    let lay = &tpl.layout;
    if lay.kind != kind {
        return Err(Error::InvalidProgram(format!("templates built for {} lowered as {}", lay.kind.name(), kind.name())));
    }
    if kind.is_feasibility() != lay.mu.is_some() || (kind.optimizes_theta() != tpl.penalty.is_some() && !lay.base.theta.is_empty()) {
        return Err(Error::InvalidProgram(format!("template set inconsistent with {}", kind.name())));
    }
    let scenario = kind.scenario();
    let mut prog = tpl.program.clone();
    let s = prog.add_var("s");

    for t in &tpl.iu {
        let e = lower_rate(&mut prog, t, delta);
        prog.add_ge(format!("{} epigraph", t.label), &e, &LinExpr::var(s));
    }

    let mu = lay.mu.map(LinExpr::var);
    // Feasibility scales the energy requirement `c·τ_e/τ̄_e` by `μ`; the product
    // is bounded above by `(a/2)(τ_e/τ̄_e)² + μ²/(2a)`, tight at `μ = a`, `τ_e = τ̄_e`.
    let squares = match &mu {
        Some(m) if !tpl.energy.is_empty() => {
            let t = prog.add_var("tau_e_sq");
            prog.add_rotated("energy time square", LinExpr::var(t), LinExpr::constant(0.5), vec![lay.tau[1].scale(1.0 / lay.base.tau[1])]);
            let q = prog.add_var("mu_sq");
            prog.add_rotated("energy scale square", LinExpr::var(q), LinExpr::constant(0.5), vec![m.clone()]);
            Some((t, q))
        }
        _ => None,
    };
    for e in &tpl.energy {
        let rhs = match squares {
            Some((t, q)) => {
                let c = e.required.constant;
                let a = (1.0 / c).min(1.0).max(1e-4);
                LinExpr::term(t, 0.5 * a * c).add_scaled(&LinExpr::var(q), 0.5 * c / a)
            }
            None => e.required.clone(),
        };
        prog.add_ge(e.label.clone(), &e.lin, &rhs);
    }
    for (k, terms) in tpl.d2d.iter().enumerate() {
        let mut total = LinExpr::zero();
        for t in terms {
            total = &total + &lower_rate(&mut prog, t, delta);
        }
        let rhs = match &mu {
            Some(m) => m.scale(tpl.r_min),
            None => LinExpr::constant(tpl.r_min),
        };
        prog.add_ge(format!("D2D {k} rate threshold"), &total, &rhs);
    }

    if !kind.optimizes_theta() {
        lower_power_and_time(&mut prog, tpl, scenario);
    } else {
        for (n, &(re, im)) in lay.theta_slots.iter().enumerate() {
            prog.add_soc(format!("reflection modulus {n}"), LinExpr::constant(1.0), vec![LinExpr::var(re), LinExpr::var(im)]);
        }
    }

    let mut objective = LinExpr::var(s);
    if let Some(m) = lay.mu {
        prog.add_bounds(m, None, Some(1.0));
        objective = LinExpr::var(m).add_scaled(&objective, FEAS_RATE_WEIGHT);
    } else if let Some(pen) = &tpl.penalty {
        let u = prog.add_var("recip[penalty]");
        prog.add_hyperbolic("penalty reciprocal", LinExpr::var(u), pen.denom.clone());
        prog.add_nonneg("penalty trust region", &pen.denom + (-delta));
        objective = objective.add_scaled(&LinExpr::var(u), -tpl.eta / pen.d_bar);
        objective = &objective + tpl.eta / pen.n as f64;
    } else if !lay.base.theta.is_empty() {
        objective = &objective + tpl.eta * crate::model::penalty_omega(&lay.base.theta)?;
    }
    prog.set_objective(objective);
    prog.validate()?;
    Ok(Lowered { program: prog, s, mu: lay.mu })
}

fn lower_power_and_time(prog: &mut ConicProgram, tpl: &SubproblemTemplates, scenario: Scenario) {
    let lay = &tpl.layout;
    let comps = |slots: &[(usize, usize)]| slots.iter().flat_map(|&(re, im)| [LinExpr::var(re), LinExpr::var(im)]).collect::<Vec<_>>();

    for (i, sl) in lay.w_slots.iter().enumerate() {
        prog.add_soc(format!("beam power IU {i}"), LinExpr::constant(1.0), comps(sl));
    }
    for (j, sl) in lay.v_slots.iter().enumerate() {
        prog.add_soc(format!("beam power EU {j}"), LinExpr::constant(1.0), comps(sl));
    }

    // r_x ≥ 1/τ_x; constants when the time split is fixed.
    let mut recips = Vec::new();
    for (idx, tau) in lay.tau.iter().enumerate() {
        if tau.is_constant() {
            recips.push(LinExpr::constant(1.0 / tau.constant));
        } else {
            let slot = lay.tau_slots[idx];
            prog.add_bounds(slot, Some(1.0), Some(TAU_MAX));
            let r = prog.add_var(format!("inv_tau[{idx}]"));
            prog.add_hyperbolic(format!("time reciprocal {idx}"), LinExpr::var(r), tau.clone());
            recips.push(LinExpr::var(r));
        }
    }
    prog.add_nonneg("time budget", LinExpr::constant(1.0).add_scaled(&LinExpr::sum(&recips), -1.0));

    // Σ‖ŵ‖²/τ_i + Σ‖v̂‖²/τ_e ≤ 1 (− 1/τ_d for OTA).
    let mut used = LinExpr::zero();
    for (slots, tau, name) in [(&lay.w_slots, &lay.tau[0], "information"), (&lay.v_slots, &lay.tau[1], "energy")] {
        if slots.is_empty() {
            continue;
        }
        let q = prog.add_var(format!("budget[{name}]"));
        let all: Vec<LinExpr> = slots.iter().flat_map(|s| comps(s)).collect();
        prog.add_rotated(format!("{name} power over time"), LinExpr::var(q), tau.scale(0.5), all);
        used = &used + &LinExpr::var(q);
    }
    if scenario == Scenario::Ota {
        used = &used + &recips[2];
    }
    prog.add_nonneg("BS power budget", LinExpr::constant(1.0).add_scaled(&used, -1.0));

    for (k, &slot) in lay.p_slots.iter().enumerate() {
        prog.add_bounds(slot, Some(0.0), None);
        let cap = match scenario {
            Scenario::Nota => LinExpr::constant(1.0),
            Scenario::Ota => lay.tau[2].clone(),
        };
        prog.add_nonneg(format!("D2D power cap {k}"), cap.add_scaled(&LinExpr::var(slot), -1.0));
    }
}

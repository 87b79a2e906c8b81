//! Concave minorants of the rate, energy and penalty terms, both as plain
//! numeric functions and as templates over the variables of a subproblem.
//!
//! Every template row is normalized by its value at the expansion point, so
//! reciprocal arguments and interference terms are close to one there.

use num_complex::Complex64;

use crate::conic::{cdot, CExpr, ConicProgram, ConvexQuadratic, LinExpr};
use crate::error::{Error, Result};
use crate::model::{dot, AffineRow, AffineScalar, ChannelMaps, DesignPoint, EffectiveChannels, Scenario};
use crate::scenario::{ScenarioConfig, C64};

fn positive(vals: &[f64], what: &str) -> Result<()> {
    if vals.iter().all(|v| *v > 0.0 && v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Degenerate(format!("{what} needs strictly positive arguments")))
    }
}

/// `ln(1+x̄/ȳ) + (x̄/ȳ)/(1+x̄/ȳ)·(2 − x̄/x − y/ȳ)`, a lower bound on `ln(1+x/y)`.
pub fn lb_log1p_ratio(x: f64, y: f64, x_bar: f64, y_bar: f64) -> Result<f64> {
    positive(&[x, y, x_bar, y_bar], "lb_log1p_ratio")?;
    let c = SurrogateCoefficients::log1p_ratio(x_bar, y_bar)?;
    Ok(c.a + c.b * (2.0 - x_bar / x - y / y_bar))
}

/// Lower bound on `ln(1+x/y)/t`, tight at `(x̄, ȳ, t̄)`.
pub fn lb_log1p_ratio_over_t(x: f64, y: f64, t: f64, x_bar: f64, y_bar: f64, t_bar: f64) -> Result<f64> {
    positive(&[x, y, t, x_bar, y_bar, t_bar], "lb_log1p_ratio_over_t")?;
    let c = SurrogateCoefficients::log1p_ratio_over_t(x_bar, y_bar, t_bar)?;
    Ok(c.a + c.b * (2.0 - x_bar / x - y / y_bar) - c.c * t)
}

/// `2x·x̄ − x̄²`, a lower bound on `x²`.
pub fn lb_square(x: f64, x_bar: f64) -> f64 {
    2.0 * x * x_bar - x_bar * x_bar
}

/// `1/N − 1/Σ(2Re{θ̄_n*·θ_n} − |θ̄_n|²)`, a lower bound on `Ω(θ)`.
pub fn lb_penalty(theta: &[C64], theta_bar: &[C64]) -> Result<f64> {
    if theta.len() != theta_bar.len() || theta.is_empty() {
        return Err(Error::Dimension("penalty bound needs equal nonempty vectors".into()));
    }
    let d: f64 = theta.iter().zip(theta_bar).map(|(t, b)| 2.0 * (b.conj() * t).re - b.norm_sqr()).sum();
    if d <= 0.0 {
        return Err(Error::Degenerate("penalty bound outside its trust region".into()));
    }
    Ok(1.0 / theta.len() as f64 - 1.0 / d)
}

/// Coefficients of `a + b·(2 − x̄/x − y/ȳ) − c·t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateCoefficients {
    pub a: f64,
    pub b: f64,
    /// Zero for the family without a time variable.
    pub c: f64,
    pub x_bar: f64,
    pub y_bar: f64,
    pub t_bar: Option<f64>,
}

impl SurrogateCoefficients {
    pub fn log1p_ratio(x_bar: f64, y_bar: f64) -> Result<Self> {
        positive(&[x_bar, y_bar], "surrogate expansion point")?;
        let s = x_bar / y_bar;
        Ok(Self { a: s.ln_1p(), b: s / (1.0 + s), c: 0.0, x_bar, y_bar, t_bar: None })
    }

    pub fn log1p_ratio_over_t(x_bar: f64, y_bar: f64, t_bar: f64) -> Result<Self> {
        positive(&[x_bar, y_bar, t_bar], "surrogate expansion point")?;
        let s = x_bar / y_bar;
        let l = s.ln_1p();
        Ok(Self { a: 2.0 * l / t_bar, b: s / (t_bar * (1.0 + s)), c: l / (t_bar * t_bar), x_bar, y_bar, t_bar: Some(t_bar) })
    }

    /// The fixed-time family scaled by `1/t̄`.
    fn over_fixed_t(x_bar: f64, y_bar: f64, t_bar: f64) -> Result<Self> {
        let mut c = Self::log1p_ratio(x_bar, y_bar)?;
        c.a /= t_bar;
        c.b /= t_bar;
        c.t_bar = Some(t_bar);
        Ok(c)
    }
}

/// Half-space `L ≥ 0` on which a linearized reciprocal is valid; `expr` is
/// `L` itself, equal to the linearized square at the expansion point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionCut {
    pub label: String,
    pub expr: LinExpr,
}

/// `a + b·(2 − 1/recip − psi) − c·tau`, a concave minorant of a time-weighted rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTemplate {
    pub label: String,
    pub coeffs: SurrogateCoefficients,
    pub tau: LinExpr,
    /// Signal term divided by its expansion value; one at the expansion point.
    pub recip: LinExpr,
    /// Interference-plus-noise divided by its expansion value.
    pub psi: ConvexQuadratic,
    pub cut: Option<TrustRegionCut>,
}

impl RateTemplate {
    pub fn value(&self, x: &[f64]) -> f64 {
        let c = &self.coeffs;
        c.a + c.b * (2.0 - 1.0 / self.recip.eval(x) - self.psi.eval(x)) - c.c * self.tau.eval(x)
    }
}

/// Linearized energy `lin ≥ required`, both divided by the expansion value.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTemplate {
    pub label: String,
    pub lin: LinExpr,
    pub required: LinExpr,
    /// Expansion value in normalized power units.
    pub scale: f64,
}

impl EnergyTemplate {
    /// Linearized energy in normalized power units.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.scale * self.lin.eval(x)
    }
}

/// `1/N − 1/(d̄·denom)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyTemplate {
    pub denom: LinExpr,
    pub d_bar: f64,
    pub n: usize,
}

impl PenaltyTemplate {
    pub fn value(&self, x: &[f64]) -> f64 {
        1.0 / self.n as f64 - 1.0 / (self.d_bar * self.denom.eval(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubproblemKind {
    Nota1,
    Nota2,
    Ota1,
    Ota2,
    FeasNota,
    FeasOta,
}

impl SubproblemKind {
    pub fn scenario(self) -> Scenario {
        match self {
            Self::Nota1 | Self::Nota2 | Self::FeasNota => Scenario::Nota,
            Self::Ota1 | Self::Ota2 | Self::FeasOta => Scenario::Ota,
        }
    }

    /// True when `θ` is the decision variable.
    pub fn optimizes_theta(self) -> bool {
        matches!(self, Self::Nota2 | Self::Ota2)
    }

    pub fn is_feasibility(self) -> bool {
        matches!(self, Self::FeasNota | Self::FeasOta)
    }

    pub fn block1(scenario: Scenario) -> Self {
        match scenario {
            Scenario::Nota => Self::Nota1,
            Scenario::Ota => Self::Ota1,
        }
    }

    pub fn block2(scenario: Scenario) -> Self {
        match scenario {
            Scenario::Nota => Self::Nota2,
            Scenario::Ota => Self::Ota2,
        }
    }

    pub fn feasibility(scenario: Scenario) -> Self {
        match scenario {
            Scenario::Nota => Self::FeasNota,
            Scenario::Ota => Self::FeasOta,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Nota1 => "nota1",
            Self::Nota2 => "nota2",
            Self::Ota1 => "ota1",
            Self::Ota2 => "ota2",
            Self::FeasNota => "feas_nota",
            Self::FeasOta => "feas_ota",
        }
    }
}

/// Mapping between conic variables and the physical design variables.
///
/// Beamformers are stored as `ŵ = w/√P_B`, powers as `p̂ = p/P_k`. Quantities
/// that a subproblem holds fixed are constant expressions.
#[derive(Debug, Clone)]
pub struct Layout {
    pub kind: SubproblemKind,
    pub w: Vec<Vec<CExpr>>,
    pub v: Vec<Vec<CExpr>>,
    /// Power in mW.
    pub p: Vec<LinExpr>,
    pub tau: Vec<LinExpr>,
    pub theta: Vec<CExpr>,
    /// Conic slots of the scaled variables, used for norm constraints.
    pub w_slots: Vec<Vec<(usize, usize)>>,
    pub v_slots: Vec<Vec<(usize, usize)>>,
    pub p_slots: Vec<usize>,
    pub tau_slots: Vec<usize>,
    pub theta_slots: Vec<(usize, usize)>,
    pub mu: Option<usize>,
    /// Expansion point.
    pub base: DesignPoint,
    /// Effective channels at the expansion `θ`.
    pub eff: EffectiveChannels,
    pub p_b_max: f64,
    pub p_k_max: f64,
}

impl Layout {
    /// Allocates the decision variables of `kind` in `prog`, expanding around `base`.
    pub fn new(prog: &mut ConicProgram, kind: SubproblemKind, maps: &ChannelMaps, cfg: &ScenarioConfig, base: &DesignPoint) -> Result<Self> {
        if base.tau.len() != kind.scenario().num_fractions() {
            return Err(Error::InvalidProgram(format!("{} expects {} time fractions", kind.name(), kind.scenario().num_fractions())));
        }
        let (pb, pk) = (cfg.p_b_max_mw(), cfg.p_k_max_mw());
        let sb = pb.sqrt();
        let mut lay = Layout {
            kind,
            w: Vec::new(),
            v: Vec::new(),
            p: Vec::new(),
            tau: Vec::new(),
            theta: Vec::new(),
            w_slots: Vec::new(),
            v_slots: Vec::new(),
            p_slots: Vec::new(),
            tau_slots: Vec::new(),
            theta_slots: Vec::new(),
            mu: None,
            base: base.clone(),
            eff: maps.at(&base.theta),
            p_b_max: pb,
            p_k_max: pk,
        };
        let constant_beams = |b: &[Vec<C64>]| b.iter().map(|x| x.iter().map(|&z| CExpr::constant(z)).collect()).collect();
        if kind.optimizes_theta() {
            lay.w = constant_beams(&base.w);
            lay.v = constant_beams(&base.v);
            lay.p = base.p.iter().map(|&p| LinExpr::constant(p)).collect();
            lay.tau = base.tau.iter().map(|&t| LinExpr::constant(t)).collect();
            for n in 0..base.theta.len() {
                let (re, im) = prog.add_complex_var(&format!("theta[{n}]"));
                lay.theta_slots.push((re, im));
                lay.theta.push(CExpr::var(re, im, 1.0));
            }
            return Ok(lay);
        }
        let beams = |prog: &mut ConicProgram, name: &str, count: usize, m: usize| {
            let mut exprs = Vec::new();
            let mut slots = Vec::new();
            for i in 0..count {
                let mut e = Vec::new();
                let mut s = Vec::new();
                for a in 0..m {
                    let (re, im) = prog.add_complex_var(&format!("{name}[{i}][{a}]"));
                    e.push(CExpr::var(re, im, sb));
                    s.push((re, im));
                }
                exprs.push(e);
                slots.push(s);
            }
            (exprs, slots)
        };
        let m = maps.iu.first().map_or(0, |r| r.base.len());
        (lay.w, lay.w_slots) = beams(prog, "w", base.w.len(), m);
        (lay.v, lay.v_slots) = beams(prog, "v", base.v.len(), m);
        for k in 0..base.p.len() {
            let idx = prog.add_var(format!("p[{k}]"));
            lay.p_slots.push(idx);
            lay.p.push(LinExpr::term(idx, pk));
        }
        for (i, _) in base.tau.iter().enumerate() {
            let idx = prog.add_var(format!("tau[{i}]"));
            lay.tau_slots.push(idx);
            lay.tau.push(LinExpr::var(idx));
        }
        if kind.is_feasibility() {
            lay.mu = Some(prog.add_var("mu"));
        }
        lay.theta = base.theta.iter().map(|&z| CExpr::constant(z)).collect();
        Ok(lay)
    }

    /// Conic vector corresponding to the expansion point.
    pub fn encode_base(&self, nvars: usize) -> Vec<f64> {
        let mut x = vec![0.0; nvars];
        let sb = self.p_b_max.sqrt();
        for (slots, vals) in self.w_slots.iter().zip(&self.base.w).chain(self.v_slots.iter().zip(&self.base.v)) {
            for (&(re, im), z) in slots.iter().zip(vals) {
                x[re] = z.re / sb;
                x[im] = z.im / sb;
            }
        }
        for (&s, &p) in self.p_slots.iter().zip(&self.base.p) {
            x[s] = p / self.p_k_max;
        }
        for (&s, &t) in self.tau_slots.iter().zip(&self.base.tau) {
            x[s] = t;
        }
        for (&(re, im), z) in self.theta_slots.iter().zip(&self.base.theta) {
            x[re] = z.re;
            x[im] = z.im;
        }
        x
    }

    /// Design point represented by the conic vector `x`. Powers are clipped at zero.
    pub fn decode(&self, x: &[f64]) -> DesignPoint {
        let beams = |b: &[Vec<CExpr>]| b.iter().map(|e| e.iter().map(|z| z.eval(x)).collect()).collect();
        DesignPoint {
            w: beams(&self.w),
            v: beams(&self.v),
            p: self.p.iter().map(|p| p.eval(x).max(0.0)).collect(),
            tau: self.tau.iter().map(|t| t.eval(x)).collect(),
            theta: self.theta.iter().map(|z| z.eval(x)).collect(),
        }
    }

    /// `row(θ)·w` where exactly one of the two factors is variable.
    fn row_times(&self, row: &AffineRow, eff_row: &[C64], w: &[CExpr], w_bar: &[C64]) -> CExpr {
        if self.kind.optimizes_theta() {
            let s = row.times(w_bar);
            cdot(&s.coefs, &self.theta).add_scaled(&CExpr::constant(s.base), Complex64::new(1.0, 0.0))
        } else {
            cdot(eff_row, w)
        }
    }

    fn scalar(&self, s: &AffineScalar, eff: C64) -> CExpr {
        if self.kind.optimizes_theta() {
            cdot(&s.coefs, &self.theta).add_scaled(&CExpr::constant(s.base), Complex64::new(1.0, 0.0))
        } else {
            CExpr::constant(eff)
        }
    }

    /// Adds `p·|g|²` to `quad`, where `p` or `g` is constant.
    fn add_power_gain(quad: &mut ConvexQuadratic, p: &LinExpr, g: &CExpr) {
        if g.is_constant() {
            quad.lin = quad.lin.add_scaled(p, g.constant_value().norm_sqr());
        } else {
            debug_assert!(p.is_constant());
            if p.constant > 0.0 {
                quad.add_abs2(g, p.constant);
            }
        }
    }
}

fn rate_coefficients(tau: &LinExpr, tau_bar: f64, x_bar: f64, y_bar: f64) -> Result<SurrogateCoefficients> {
    if tau.is_constant() {
        SurrogateCoefficients::over_fixed_t(x_bar, y_bar, tau_bar)
    } else {
        SurrogateCoefficients::log1p_ratio_over_t(x_bar, y_bar, tau_bar)
    }
}

fn linearized_square(label: &str, s: &CExpr, s_bar: C64) -> Result<(LinExpr, TrustRegionCut)> {
    let x_bar = s_bar.norm_sqr();
    if !(x_bar > 0.0) {
        return Err(Error::Degenerate(format!("{label}: zero signal at the expansion point")));
    }
    let raw = &s.re_mul_conj(s_bar).scale(2.0) + (-x_bar);
    Ok((raw.scale(1.0 / x_bar), TrustRegionCut { label: format!("{label} trust region"), expr: raw }))
}

fn normalized_psi(mut quad: ConvexQuadratic, y_bar: f64) -> ConvexQuadratic {
    quad.lin = &quad.lin + 1.0;
    quad.scale(1.0 / y_bar)
}

/// Minorants of `(1/τ_i)·R_i` for every IU.
pub fn build_iu_rate_surrogates(lay: &Layout, maps: &ChannelMaps) -> Result<Vec<RateTemplate>> {
    let base = &lay.base;
    let nota = lay.kind.scenario() == Scenario::Nota;
    let mut out = Vec::new();
    for (i, row) in maps.iu.iter().enumerate() {
        let h = &lay.eff.iu[i];
        let label = format!("IU {i} rate");
        let s = lay.row_times(row, h, &lay.w[i], &base.w[i]);
        let s_bar = dot(h, &base.w[i]);
        let mut quad = ConvexQuadratic::default();
        let mut y_bar = 1.0;
        for (l, w) in lay.w.iter().enumerate() {
            if l != i {
                quad.add_abs2(&lay.row_times(row, h, w, &base.w[l]), 1.0);
                y_bar += dot(h, &base.w[l]).norm_sqr();
            }
        }
        if nota {
            for k in 0..base.p.len() {
                Layout::add_power_gain(&mut quad, &lay.p[k], &lay.scalar(&maps.d2d_iu[k][i], lay.eff.d2d_iu[k][i]));
                y_bar += base.p[k] * lay.eff.d2d_iu[k][i].norm_sqr();
            }
        }
        let (recip, cut) = linearized_square(&label, &s, s_bar)?;
        out.push(RateTemplate {
            coeffs: rate_coefficients(&lay.tau[0], base.tau[0], s_bar.norm_sqr(), y_bar)?,
            tau: lay.tau[0].clone(),
            recip,
            psi: normalized_psi(quad, y_bar),
            cut: Some(cut),
            label,
        });
    }
    Ok(out)
}

/// Linearized harvested energy for every EU, with the requirement
/// `E ≥ e_min·τ_e/(ρσ²)` in normalized power units.
pub fn build_energy_linearizations(lay: &Layout, maps: &ChannelMaps, cfg: &ScenarioConfig) -> Result<Vec<EnergyTemplate>> {
    let base = &lay.base;
    let nota = lay.kind.scenario() == Scenario::Nota;
    let e_req = cfg.e_min_mw() / (cfg.power.rho * maps.noise_power_mw);
    let mut out = Vec::new();
    for (j, row) in maps.eu.iter().enumerate() {
        let h = &lay.eff.eu[j];
        let mut lin = LinExpr::zero();
        let mut e_bar = 0.0;
        for (l, v) in lay.v.iter().enumerate() {
            let s = lay.row_times(row, h, v, &base.v[l]);
            let s_bar = dot(h, &base.v[l]);
            lin = &lin + &(&s.re_mul_conj(s_bar).scale(2.0) + (-s_bar.norm_sqr()));
            e_bar += s_bar.norm_sqr();
        }
        if nota {
            for k in 0..base.p.len() {
                let g_bar = lay.eff.d2d_eu[k][j];
                let g = lay.scalar(&maps.d2d_eu[k][j], g_bar);
                if g.is_constant() {
                    lin = lin.add_scaled(&lay.p[k], g_bar.norm_sqr());
                } else {
                    lin = lin.add_scaled(&(&g.re_mul_conj(g_bar).scale(2.0) + (-g_bar.norm_sqr())), base.p[k]);
                }
                e_bar += base.p[k] * g_bar.norm_sqr();
            }
        }
        if !(e_bar > 0.0) {
            return Err(Error::Degenerate(format!("EU {j}: zero received energy at the expansion point")));
        }
        out.push(EnergyTemplate {
            label: format!("energy EU {j}"),
            lin: lin.scale(1.0 / e_bar),
            // Feasibility keeps the constant `τ̄_e` factor; the lowering
            // handles the product of `μ` and `τ_e/τ̄_e`.
            required: if lay.mu.is_some() {
                LinExpr::constant(base.tau[1] * e_req / e_bar)
            } else {
                lay.tau[1].scale(e_req / e_bar)
            },
            scale: e_bar,
        });
    }
    Ok(out)
}

/// Minorants of the D2D throughput terms of each pair: two phase terms for
/// N-OTA, one `t_d` term for OTA.
pub fn build_d2d_rate_surrogates(lay: &Layout, maps: &ChannelMaps) -> Result<Vec<Vec<RateTemplate>>> {
    let base = &lay.base;
    let k_all = base.p.len();
    let mut out = Vec::new();
    for k in 0..k_all {
        let h_bar = lay.eff.direct[k];
        let x_bar = base.p[k] * h_bar.norm_sqr();
        let label = format!("D2D {k}");
        let (recip, cut) = if lay.kind.optimizes_theta() {
            let (r, c) = linearized_square(&label, &lay.scalar(&maps.direct[k], h_bar), h_bar)?;
            (r, Some(c))
        } else {
            if !(base.p[k] > 0.0) {
                return Err(Error::Degenerate(format!("{label}: zero power at the expansion point")));
            }
            (lay.p[k].scale(1.0 / base.p[k]), None)
        };
        let mut mutual = ConvexQuadratic::default();
        let mut mutual_bar = 0.0;
        for l in (0..k_all).filter(|&l| l != k) {
            let g_bar = lay.eff.cross[l][k];
            Layout::add_power_gain(&mut mutual, &lay.p[l], &lay.scalar(&maps.cross[l][k], g_bar));
            mutual_bar += base.p[l] * g_bar.norm_sqr();
        }
        let phases: Vec<(usize, &[Vec<CExpr>], &[Vec<C64>], &str)> = match lay.kind.scenario() {
            Scenario::Nota => vec![(0, &lay.w, &base.w, "t_i"), (1, &lay.v, &base.v, "t_e")],
            Scenario::Ota => vec![(2, &[][..], &[][..], "t_d")],
        };
        let mut terms = Vec::new();
        for (ti, beams, beams_bar, phase) in phases {
            let mut quad = mutual.clone();
            let mut y_bar = 1.0 + mutual_bar;
            let g_row = &lay.eff.bs_d2d[k];
            for (b, b_bar) in beams.iter().zip(beams_bar) {
                quad.add_abs2(&lay.row_times(&maps.bs_d2d[k], g_row, b, b_bar), 1.0);
                y_bar += dot(g_row, b_bar).norm_sqr();
            }
            terms.push(RateTemplate {
                label: format!("{label} {phase}"),
                coeffs: rate_coefficients(&lay.tau[ti], base.tau[ti], x_bar, y_bar)?,
                tau: lay.tau[ti].clone(),
                recip: recip.clone(),
                psi: normalized_psi(quad, y_bar),
                cut: cut.clone(),
            });
        }
        out.push(terms);
    }
    Ok(out)
}

/// Linearized penalty denominator around the expansion `θ`.
pub fn build_penalty_surrogate(lay: &Layout) -> Result<PenaltyTemplate> {
    let theta_bar = &lay.base.theta;
    let d_bar: f64 = theta_bar.iter().map(|z| z.norm_sqr()).sum();
    if theta_bar.is_empty() || !(d_bar > 0.0) {
        return Err(Error::Degenerate("penalty needs a nonzero reflection vector".into()));
    }
    let mut denom = LinExpr::constant(-d_bar);
    for (t, tb) in lay.theta.iter().zip(theta_bar) {
        denom = &denom + &t.re_mul_conj(*tb).scale(2.0);
    }
    Ok(PenaltyTemplate { denom: denom.scale(1.0 / d_bar), d_bar, n: theta_bar.len() })
}

/// All templates of one subproblem.
#[derive(Debug, Clone)]
pub struct SubproblemTemplates {
    pub program: ConicProgram,
    pub layout: Layout,
    pub iu: Vec<RateTemplate>,
    pub energy: Vec<EnergyTemplate>,
    /// Empty when the D2D threshold is zero (the constraint is then inactive).
    pub d2d: Vec<Vec<RateTemplate>>,
    pub penalty: Option<PenaltyTemplate>,
    pub eta: f64,
    pub r_min: f64,
}

impl SubproblemTemplates {
    /// `min_i` IU template `+ η·Ω`, using the penalty template when `θ` is a
    /// variable and the exact `Ω(θ̄)` otherwise.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let f = self.iu.iter().map(|t| t.value(x)).fold(f64::INFINITY, f64::min);
        let omega = match &self.penalty {
            Some(p) => p.value(x),
            None if self.layout.base.theta.is_empty() => 0.0,
            None => crate::model::penalty_omega(&self.layout.base.theta).unwrap_or(0.0),
        };
        f + self.eta * omega
    }
}

/// Builds every template of `kind` around `base`.
pub fn build_templates(kind: SubproblemKind, maps: &ChannelMaps, cfg: &ScenarioConfig, base: &DesignPoint, eta: f64) -> Result<SubproblemTemplates> {
    let mut program = ConicProgram::new();
    let layout = Layout::new(&mut program, kind, maps, cfg, base)?;
    let iu = build_iu_rate_surrogates(&layout, maps)?;
    let energy = build_energy_linearizations(&layout, maps, cfg)?;
    let r_min = cfg.r_k_min_nats();
    let d2d = if r_min > 0.0 { build_d2d_rate_surrogates(&layout, maps)? } else { Vec::new() };
    let penalty = if kind.optimizes_theta() && !base.theta.is_empty() { Some(build_penalty_surrogate(&layout)?) } else { None };
    Ok(SubproblemTemplates { program, layout, iu, energy, d2d, penalty, eta, r_min })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_minorant_examples() {
        let ln2 = std::f64::consts::LN_2;
        assert!((lb_log1p_ratio(1.0, 1.0, 1.0, 1.0).unwrap() - ln2).abs() < 1e-15);
        assert!((lb_log1p_ratio(2.0, 1.0, 1.0, 1.0).unwrap() - (ln2 + 0.25)).abs() < 1e-15);
        assert!((lb_log1p_ratio_over_t(1.0, 1.0, 2.0, 1.0, 1.0, 2.0).unwrap() - ln2 / 2.0).abs() < 1e-15);
        assert!(lb_log1p_ratio_over_t(1.0, 1.0, 4.0, 1.0, 1.0, 2.0).unwrap().abs() < 1e-15);
        assert_eq!(lb_square(3.0, 3.0), 9.0);
        assert_eq!(lb_square(2.0, 1.0), 3.0);
        assert!(lb_log1p_ratio(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn penalty_bound_is_tight_at_unit_modulus() {
        let t = vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        assert!(lb_penalty(&t, &t).unwrap().abs() < 1e-15);
        let theta = vec![C64::new(1.0, 0.0), C64::new(0.9, 0.0)];
        let bar = vec![C64::new(1.0, 0.0); 2];
        assert!(lb_penalty(&theta, &bar).unwrap() <= crate::model::penalty_omega(&theta).unwrap());
    }
}

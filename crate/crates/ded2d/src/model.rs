//! Exact rate, energy and constraint evaluation at a design point.
//!
//! All SINR quantities use the noise-normalized channels of [`ChannelSet`], so
//! every noise variance is one. Harvested energy is reported in mW by undoing
//! that normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{ChannelSet, ScenarioConfig, C64};

/// Tolerance on normalized residuals below which a point counts as feasible.
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// D2D pairs transmit during both BS phases.
    Nota,
    /// D2D pairs get their own time fraction.
    Ota,
}

impl Scenario {
    pub fn num_fractions(self) -> usize {
        match self {
            Scenario::Nota => 2,
            Scenario::Ota => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Nota => "nota",
            Scenario::Ota => "ota",
        }
    }
}

/// Decision variables of one iterate, in physical units (`w`, `v` in √mW,
/// `p` in mW). `tau` holds the reciprocal time fractions `(τ_i, τ_e[, τ_d])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub w: Vec<Vec<C64>>,
    pub v: Vec<Vec<C64>>,
    pub p: Vec<f64>,
    pub tau: Vec<f64>,
    pub theta: Vec<C64>,
}

impl DesignPoint {
    pub fn scenario(&self) -> Scenario {
        if self.tau.len() == 3 {
            Scenario::Ota
        } else {
            Scenario::Nota
        }
    }

    /// Time fractions `t = 1/τ`.
    pub fn fractions(&self) -> Vec<f64> {
        self.tau.iter().map(|t| 1.0 / t).collect()
    }

    pub fn min_theta_modulus(&self) -> f64 {
        self.theta.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    fn check(&self, ch: &ChannelSet) -> Result<()> {
        let m = ch.m();
        let ok = self.w.len() == ch.num_ius()
            && self.v.len() == ch.num_eus()
            && self.p.len() == ch.num_pairs()
            && self.theta.len() == ch.n()
            && (self.tau.len() == 2 || self.tau.len() == 3)
            && self.w.iter().chain(&self.v).all(|b| b.len() == m);
        if !ok {
            return Err(Error::Dimension("design point does not match channel dimensions".into()));
        }
        let finite = self.w.iter().chain(&self.v).flatten().chain(&self.theta).all(|z| z.re.is_finite() && z.im.is_finite())
            && self.p.iter().chain(&self.tau).all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidConfig("design point has non-finite entries".into()));
        }
        Ok(())
    }
}

/// A `1 × M` row that is affine in `θ`: `base + Σ_n θ_n·coefs[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineRow {
    pub base: Vec<C64>,
    pub coefs: Vec<Vec<C64>>,
}

impl AffineRow {
    /// Row of `h^H + h_r^H·diag(θ)·G`.
    fn cascade(direct: &[C64], irs: &[C64], g: &[Vec<C64>]) -> Self {
        Self {
            base: direct.iter().map(|z| z.conj()).collect(),
            coefs: irs.iter().zip(g).map(|(hr, row)| row.iter().map(|x| hr.conj() * x).collect()).collect(),
        }
    }

    pub fn at(&self, theta: &[C64]) -> Vec<C64> {
        let mut out = self.base.clone();
        for (t, c) in theta.iter().zip(&self.coefs) {
            for (o, x) in out.iter_mut().zip(c) {
                *o += t * x;
            }
        }
        out
    }

    /// The scalar map `θ ↦ row(θ)·w` for a fixed beamformer.
    pub fn times(&self, w: &[C64]) -> AffineScalar {
        AffineScalar { base: dot(&self.base, w), coefs: self.coefs.iter().map(|c| dot(c, w)).collect() }
    }
}

/// A scalar affine in `θ`: `base + Σ_n θ_n·coefs[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineScalar {
    pub base: C64,
    pub coefs: Vec<C64>,
}

impl AffineScalar {
    /// `g + h_r^H·diag(θ)·h_(k,r)`.
    fn cascade(direct: C64, irs: &[C64], tx: &[C64]) -> Self {
        Self { base: direct, coefs: irs.iter().zip(tx).map(|(hr, t)| hr.conj() * t).collect() }
    }

    pub fn at(&self, theta: &[C64]) -> C64 {
        self.base + theta.iter().zip(&self.coefs).map(|(t, c)| t * c).sum::<C64>()
    }
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Every effective channel as an affine map of `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMaps {
    /// `h_(B,d_i)(θ)`.
    pub iu: Vec<AffineRow>,
    /// `h_(B,e_j)(θ)`.
    pub eu: Vec<AffineRow>,
    /// `g_(B,k)(θ)`.
    pub bs_d2d: Vec<AffineRow>,
    /// `[k][i]` → `g_(k,d_i)(θ)`.
    pub d2d_iu: Vec<Vec<AffineScalar>>,
    /// `[k][j]` → `g_(k,e_j)(θ)`.
    pub d2d_eu: Vec<Vec<AffineScalar>>,
    /// `h_k(θ)`.
    pub direct: Vec<AffineScalar>,
    /// `[l][k]` → `g_(l,k)(θ)`; diagonal unused.
    pub cross: Vec<Vec<AffineScalar>>,
    pub noise_power_mw: f64,
}

impl ChannelMaps {
    pub fn new(ch: &ChannelSet) -> Self {
        let g = &ch.bs_to_irs;
        let k = ch.num_pairs();
        let iu = ch.bs_to_iu.iter().zip(&ch.irs_to_iu).map(|(h, r)| AffineRow::cascade(h, r, g)).collect();
        let eu = ch.bs_to_eu.iter().zip(&ch.irs_to_eu).map(|(h, r)| AffineRow::cascade(h, r, g)).collect();
        let bs_d2d = ch.bs_to_d2drx.iter().zip(&ch.irs_to_d2drx).map(|(h, r)| AffineRow::cascade(h, r, g)).collect();
        let d2d_iu = (0..k)
            .map(|kk| ch.irs_to_iu.iter().zip(&ch.d2dtx_to_iu[kk]).map(|(r, &g0)| AffineScalar::cascade(g0, r, &ch.d2dtx_to_irs[kk])).collect())
            .collect();
        let d2d_eu = (0..k)
            .map(|kk| ch.irs_to_eu.iter().zip(&ch.d2dtx_to_eu[kk]).map(|(r, &g0)| AffineScalar::cascade(g0, r, &ch.d2dtx_to_irs[kk])).collect())
            .collect();
        let direct = (0..k).map(|kk| AffineScalar::cascade(ch.d2d_direct[kk], &ch.irs_to_d2drx[kk], &ch.d2dtx_to_irs[kk])).collect();
        let cross = (0..k)
            .map(|l| (0..k).map(|kk| AffineScalar::cascade(ch.d2d_cross[l][kk], &ch.irs_to_d2drx[kk], &ch.d2dtx_to_irs[l])).collect())
            .collect();
        Self { iu, eu, bs_d2d, d2d_iu, d2d_eu, direct, cross, noise_power_mw: ch.noise_power_mw }
    }

    pub fn n(&self) -> usize {
        self.direct.first().map(|s| s.coefs.len()).or_else(|| self.iu.first().map(|r| r.coefs.len())).unwrap_or(0)
    }

    pub fn at(&self, theta: &[C64]) -> EffectiveChannels {
        let rows = |v: &[AffineRow]| v.iter().map(|r| r.at(theta)).collect();
        let scal = |v: &[AffineScalar]| v.iter().map(|s| s.at(theta)).collect();
        EffectiveChannels {
            iu: rows(&self.iu),
            eu: rows(&self.eu),
            bs_d2d: rows(&self.bs_d2d),
            d2d_iu: self.d2d_iu.iter().map(|r| scal(r)).collect(),
            d2d_eu: self.d2d_eu.iter().map(|r| scal(r)).collect(),
            direct: scal(&self.direct),
            cross: self.cross.iter().map(|r| scal(r)).collect(),
        }
    }
}

/// Effective channels at one fixed `θ` (normalized units).
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannels {
    pub iu: Vec<Vec<C64>>,
    pub eu: Vec<Vec<C64>>,
    pub bs_d2d: Vec<Vec<C64>>,
    pub d2d_iu: Vec<Vec<C64>>,
    pub d2d_eu: Vec<Vec<C64>>,
    pub direct: Vec<C64>,
    pub cross: Vec<Vec<C64>>,
}

/// Effective channels at `θ`, with the affine maps that produced them.
pub fn effective_channels(ch: &ChannelSet, theta: &[C64]) -> Result<(EffectiveChannels, ChannelMaps)> {
    if theta.len() != ch.n() {
        return Err(Error::Dimension(format!("theta has {} entries, IRS has {}", theta.len(), ch.n())));
    }
    let maps = ChannelMaps::new(ch);
    Ok((maps.at(theta), maps))
}

/// `1/N − 1/Σ|θ_n|²`.
pub fn penalty_omega(theta: &[C64]) -> Result<f64> {
    let s: f64 = theta.iter().map(|z| z.norm_sqr()).sum();
    if theta.is_empty() || s <= 0.0 {
        return Err(Error::Degenerate("penalty needs a nonzero reflection vector".into()));
    }
    Ok(1.0 / theta.len() as f64 - 1.0 / s)
}

/// Signed slack of one constraint; nonnegative means satisfied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEval {
    /// `R_(t_i,d_i)` per IU, nats/s/Hz, before the time weighting.
    pub iu_rate: Vec<f64>,
    /// `t_i·R_(t_i,d_i)` per IU.
    pub iu_throughput: Vec<f64>,
    /// Interference-plus-noise at each IU (normalized, noise = 1).
    pub iu_psi: Vec<f64>,
    /// `t_e·ρ·E` per EU, mW.
    pub eu_energy_mw: Vec<f64>,
    /// Total D2D throughput per pair.
    pub d2d_throughput: Vec<f64>,
    /// D2D interference-plus-noise during `t_i` (N-OTA) or `t_d` (OTA).
    pub d2d_psi_i: Vec<f64>,
    /// D2D interference-plus-noise during `t_e` (N-OTA only, empty for OTA).
    pub d2d_psi_e: Vec<f64>,
    /// `min_i t_i·R_i`.
    pub objective: f64,
    /// `Ω(θ)`, zero when there is no IRS.
    pub penalty: f64,
    pub residuals: Vec<Residual>,
}

impl ModelEval {
    pub fn max_violation(&self) -> f64 {
        self.residuals.iter().map(|r| (-r.value).max(0.0)).fold(0.0, f64::max)
    }

    pub fn is_feasible(&self) -> bool {
        self.max_violation() <= FEAS_TOL
    }

    /// `f + η·Ω`.
    pub fn penalized(&self, eta: f64) -> f64 {
        self.objective + eta * self.penalty
    }
}

fn sinr_rate(signal: f64, psi: f64) -> f64 {
    (signal / psi).ln_1p()
}

fn relative(achieved: f64, required: f64) -> f64 {
    (achieved - required) / required.abs().max(f64::MIN_POSITIVE)
}

fn common_residuals(x: &DesignPoint, cfg: &ScenarioConfig, out: &mut Vec<Residual>) {
    let (pb, pk) = (cfg.p_b_max_mw(), cfg.p_k_max_mw());
    for (i, w) in x.w.iter().enumerate() {
        out.push(Residual { label: format!("beam power IU {i}"), value: (pb - norm_sqr(w)) / pb });
    }
    for (j, v) in x.v.iter().enumerate() {
        out.push(Residual { label: format!("beam power EU {j}"), value: (pb - norm_sqr(v)) / pb });
    }
    for (n, t) in x.theta.iter().enumerate() {
        out.push(Residual { label: format!("reflection modulus {n}"), value: 1.0 - t.norm_sqr() });
    }
    for (k, &p) in x.p.iter().enumerate() {
        out.push(Residual { label: format!("D2D power nonneg {k}"), value: p / pk });
    }
    for (idx, &t) in x.tau.iter().enumerate() {
        out.push(Residual { label: format!("tau {idx} >= 1"), value: t - 1.0 });
    }
}

/// Evaluates the N-OTA model at `x`.
pub fn evaluate_nota(ch: &ChannelSet, x: &DesignPoint, cfg: &ScenarioConfig) -> Result<ModelEval> {
    evaluate_nota_with(&ChannelMaps::new(ch), ch, x, cfg)
}

pub fn evaluate_nota_with(maps: &ChannelMaps, ch: &ChannelSet, x: &DesignPoint, cfg: &ScenarioConfig) -> Result<ModelEval> {
    x.check(ch)?;
    if x.tau.len() != 2 {
        return Err(Error::Dimension("N-OTA needs two time fractions".into()));
    }
    let eff = maps.at(&x.theta);
    let (ti, te) = (1.0 / x.tau[0], 1.0 / x.tau[1]);
    let k = x.p.len();

    let mut iu_rate = Vec::new();
    let mut iu_psi = Vec::new();
    for (i, h) in eff.iu.iter().enumerate() {
        let signal = dot(h, &x.w[i]).norm_sqr();
        let mut psi = 1.0;
        for (l, w) in x.w.iter().enumerate() {
            if l != i {
                psi += dot(h, w).norm_sqr();
            }
        }
        for kk in 0..k {
            psi += x.p[kk] * eff.d2d_iu[kk][i].norm_sqr();
        }
        iu_rate.push(sinr_rate(signal, psi));
        iu_psi.push(psi);
    }
    let iu_throughput: Vec<f64> = iu_rate.iter().map(|r| ti * r).collect();

    let scale = cfg.power.rho * maps.noise_power_mw;
    let eu_energy_mw: Vec<f64> = eff
        .eu
        .iter()
        .enumerate()
        .map(|(j, h)| {
            let e = x.v.iter().map(|v| dot(h, v).norm_sqr()).sum::<f64>() + (0..k).map(|kk| x.p[kk] * eff.d2d_eu[kk][j].norm_sqr()).sum::<f64>();
            te * scale * e
        })
        .collect();

    let mut d2d_throughput = Vec::new();
    let (mut psi_i, mut psi_e) = (Vec::new(), Vec::new());
    for kk in 0..k {
        let signal = x.p[kk] * eff.direct[kk].norm_sqr();
        let mutual: f64 = (0..k).filter(|&l| l != kk).map(|l| x.p[l] * eff.cross[l][kk].norm_sqr()).sum();
        let g = &eff.bs_d2d[kk];
        let pi = 1.0 + mutual + x.w.iter().map(|w| dot(g, w).norm_sqr()).sum::<f64>();
        let pe = 1.0 + mutual + x.v.iter().map(|v| dot(g, v).norm_sqr()).sum::<f64>();
        d2d_throughput.push(ti * sinr_rate(signal, pi) + te * sinr_rate(signal, pe));
        psi_i.push(pi);
        psi_e.push(pe);
    }

    let mut residuals = Vec::new();
    let e_min = cfg.e_min_mw();
    for (j, &e) in eu_energy_mw.iter().enumerate() {
        residuals.push(Residual { label: format!("energy EU {j}"), value: relative(e, e_min) });
    }
    let r_min = cfg.r_k_min_nats();
    for (kk, &r) in d2d_throughput.iter().enumerate() {
        residuals.push(Residual { label: format!("D2D rate {kk}"), value: r - r_min });
    }
    residuals.push(Residual { label: "time budget".into(), value: 1.0 - ti - te });
    let pb = cfg.p_b_max_mw();
    let used = ti * x.w.iter().map(|w| norm_sqr(w)).sum::<f64>() + te * x.v.iter().map(|v| norm_sqr(v)).sum::<f64>();
    residuals.push(Residual { label: "BS power budget".into(), value: (pb - used) / pb });
    let pk = cfg.p_k_max_mw();
    for (kk, &p) in x.p.iter().enumerate() {
        residuals.push(Residual { label: format!("D2D power cap {kk}"), value: (pk - p) / pk });
    }
    common_residuals(x, cfg, &mut residuals);

    Ok(ModelEval {
        objective: iu_throughput.iter().copied().fold(f64::INFINITY, f64::min),
        iu_rate,
        iu_throughput,
        iu_psi,
        eu_energy_mw,
        d2d_throughput,
        d2d_psi_i: psi_i,
        d2d_psi_e: psi_e,
        penalty: if x.theta.is_empty() { 0.0 } else { penalty_omega(&x.theta)? },
        residuals,
    })
}

/// Evaluates the OTA model at `x`.
pub fn evaluate_ota(ch: &ChannelSet, x: &DesignPoint, cfg: &ScenarioConfig) -> Result<ModelEval> {
    evaluate_ota_with(&ChannelMaps::new(ch), ch, x, cfg)
}

pub fn evaluate_ota_with(maps: &ChannelMaps, ch: &ChannelSet, x: &DesignPoint, cfg: &ScenarioConfig) -> Result<ModelEval> {
    x.check(ch)?;
    if x.tau.len() != 3 {
        return Err(Error::Dimension("OTA needs three time fractions".into()));
    }
    let eff = maps.at(&x.theta);
    let (ti, te, td) = (1.0 / x.tau[0], 1.0 / x.tau[1], 1.0 / x.tau[2]);
    let k = x.p.len();

    let mut iu_rate = Vec::new();
    let mut iu_psi = Vec::new();
    for (i, h) in eff.iu.iter().enumerate() {
        let signal = dot(h, &x.w[i]).norm_sqr();
        let psi = 1.0 + x.w.iter().enumerate().filter(|&(l, _)| l != i).map(|(_, w)| dot(h, w).norm_sqr()).sum::<f64>();
        iu_rate.push(sinr_rate(signal, psi));
        iu_psi.push(psi);
    }
    let iu_throughput: Vec<f64> = iu_rate.iter().map(|r| ti * r).collect();

    let scale = cfg.power.rho * maps.noise_power_mw;
    let eu_energy_mw: Vec<f64> = eff.eu.iter().map(|h| te * scale * x.v.iter().map(|v| dot(h, v).norm_sqr()).sum::<f64>()).collect();

    let mut d2d_throughput = Vec::new();
    let mut psi_d = Vec::new();
    for kk in 0..k {
        let signal = x.p[kk] * eff.direct[kk].norm_sqr();
        let psi = 1.0 + (0..k).filter(|&l| l != kk).map(|l| x.p[l] * eff.cross[l][kk].norm_sqr()).sum::<f64>();
        d2d_throughput.push(td * sinr_rate(signal, psi));
        psi_d.push(psi);
    }

    let mut residuals = Vec::new();
    let e_min = cfg.e_min_mw();
    for (j, &e) in eu_energy_mw.iter().enumerate() {
        residuals.push(Residual { label: format!("energy EU {j}"), value: relative(e, e_min) });
    }
    let r_min = cfg.r_k_min_nats();
    for (kk, &r) in d2d_throughput.iter().enumerate() {
        residuals.push(Residual { label: format!("D2D rate {kk}"), value: r - r_min });
    }
    residuals.push(Residual { label: "time budget".into(), value: 1.0 - ti - te - td });
    let pb = cfg.p_b_max_mw();
    let used = ti * x.w.iter().map(|w| norm_sqr(w)).sum::<f64>() + te * x.v.iter().map(|v| norm_sqr(v)).sum::<f64>();
    residuals.push(Residual { label: "BS power budget".into(), value: (pb * (1.0 - td) - used) / pb });
    let pk = cfg.p_k_max_mw();
    for (kk, &p) in x.p.iter().enumerate() {
        residuals.push(Residual { label: format!("D2D power cap {kk}"), value: (pk - td * p) / pk });
    }
    common_residuals(x, cfg, &mut residuals);

    Ok(ModelEval {
        objective: iu_throughput.iter().copied().fold(f64::INFINITY, f64::min),
        iu_rate,
        iu_throughput,
        iu_psi,
        eu_energy_mw,
        d2d_throughput,
        d2d_psi_i: psi_d,
        d2d_psi_e: Vec::new(),
        penalty: if x.theta.is_empty() { 0.0 } else { penalty_omega(&x.theta)? },
        residuals,
    })
}

/// Dispatches on the number of time fractions in `x`.
pub fn evaluate(maps: &ChannelMaps, ch: &ChannelSet, x: &DesignPoint, cfg: &ScenarioConfig) -> Result<ModelEval> {
    match x.scenario() {
        Scenario::Nota => evaluate_nota_with(maps, ch, x, cfg),
        Scenario::Ota => evaluate_ota_with(maps, ch, x, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalty_examples() {
        let ones = vec![C64::new(0.0, 1.0); 10];
        assert!(penalty_omega(&ones).unwrap().abs() < 1e-15);
        let half = vec![C64::new(0.5, 0.0); 4];
        assert!((penalty_omega(&half).unwrap() + 0.75).abs() < 1e-15);
        assert!(penalty_omega(&[C64::new(0.0, 0.0)]).is_err());
    }
}

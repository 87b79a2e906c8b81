//! Scenario configuration and random channel generation.
//!
//! Every random quantity is drawn from its own ChaCha stream keyed by
//! `(seed, link kind, indices)`. Growing `M`, `N`, `K` or the user counts
//! therefore only appends draws and never reshuffles the channels of the
//! entities that were already present.
//!
//! Channels seen by a receiver are divided by the noise amplitude `σ`, so the
//! noise variance is one in every SINR. Transmitter-side factors (`G` and the
//! D2D-transmitter-to-IRS vectors) stay in physical units. Physical received
//! power in mW is `noise_power_mw` times the normalized quantity.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Counts {
    /// BS antennas `M`.
    pub num_bs_antennas: usize,
    /// IRS elements `N`.
    pub num_irs_elements: usize,
    pub num_ius: usize,
    pub num_eus: usize,
    pub num_d2d_pairs: usize,
}

impl Default for Counts {
    fn default() -> Self {
        Self { num_bs_antennas: 6, num_irs_elements: 10, num_ius: 2, num_eus: 2, num_d2d_pairs: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Power {
    pub p_b_max_dbm: f64,
    pub p_k_max_dbm: f64,
    pub e_min_dbm: f64,
    /// Energy conversion efficiency `ρ`.
    pub rho: f64,
    /// D2D rate threshold in bps/Hz.
    pub r_k_min_bps: f64,
}

impl Default for Power {
    fn default() -> Self {
        Self { p_b_max_dbm: 20.0, p_k_max_dbm: 20.0, e_min_dbm: 0.0, rho: 0.5, r_k_min_bps: 0.4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Noise {
    pub noise_psd_dbm_hz: f64,
    pub bandwidth_hz: f64,
}

impl Default for Noise {
    fn default() -> Self {
        Self { noise_psd_dbm_hz: -174.0, bandwidth_hz: 10e6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Geometry {
    pub bs_position: [f64; 3],
    pub irs_position: [f64; 3],
    /// Users are placed uniformly in `[0, x] × [0, y]` at ground level.
    pub deployment_area: [f64; 2],
    /// Distance between the transmitter and receiver of a D2D pair.
    pub d2d_pair_distance: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            bs_position: [40.0, 0.0, 25.0],
            irs_position: [0.0, 60.0, 40.0],
            deployment_area: [120.0, 120.0],
            d2d_pair_distance: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelModel {
    pub rician_factor_db: f64,
    pub pathloss_exponent_rician: f64,
    pub pathloss_exponent_rayleigh: f64,
    pub antenna_gain_bs_dbi: f64,
    pub element_gain_irs_dbi: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            rician_factor_db: 10.0,
            pathloss_exponent_rician: 3.0,
            pathloss_exponent_rayleigh: 2.0,
            antenna_gain_bs_dbi: 5.0,
            element_gain_irs_dbi: 5.0,
        }
    }
}

/// All static parameters of one scenario. An empty TOML document yields the
/// defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub counts: Counts,
    pub power: Power,
    pub noise: Noise,
    pub geometry: Geometry,
    pub channel: ChannelModel,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            counts: Counts::default(),
            power: Power::default(),
            noise: Noise::default(),
            geometry: Geometry::default(),
            channel: ChannelModel::default(),
            rng_seed: 1,
        }
    }
}

/// Parameter names accepted by [`ScenarioConfig::set_param`].
pub const PARAM_NAMES: &[&str] = &[
    "M", "N", "U_I", "U_E", "K", "p_b_max_dbm", "p_k_max_dbm", "e_min_dbm", "rho", "r_k_min_bps",
    "noise_psd_dbm_hz", "bandwidth_hz", "d2d_pair_distance", "rician_factor_db", "rng_seed",
];

/// Energy threshold of [`ScenarioConfig::calibrated`], dBm.
///
/// With `P_B,max = 10` dBm and the default geometry, the best max-min energy
/// an EU can collect during the OTA energy phase sits between about −90 and
/// −65 dBm across seeds, so 0 dBm is unreachable. −80 dBm keeps at least 90%
/// of seeds feasible over the power and antenna sweeps.
pub const CALIBRATED_E_MIN_DBM: f64 = -80.0;

impl ScenarioConfig {
    /// Defaults with the energy threshold lowered to [`CALIBRATED_E_MIN_DBM`].
    pub fn calibrated() -> Self {
        let mut cfg = Self::default();
        cfg.power.e_min_dbm = CALIBRATED_E_MIN_DBM;
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.counts;
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if c.num_bs_antennas == 0 || c.num_ius == 0 {
            return bad("M and U_I must be at least 1");
        }
        let p = &self.power;
        if !(p.rho > 0.0 && p.rho <= 1.0) {
            return bad("rho must lie in (0, 1]");
        }
        if !(p.r_k_min_bps >= 0.0) {
            return bad("r_k_min_bps must be nonnegative");
        }
        if ![p.p_b_max_dbm, p.p_k_max_dbm, p.e_min_dbm, self.noise.noise_psd_dbm_hz].iter().all(|v| v.is_finite()) {
            return bad("power levels must be finite");
        }
        if !(self.noise.bandwidth_hz > 0.0) {
            return bad("bandwidth must be positive");
        }
        let g = &self.geometry;
        if !(g.deployment_area[0] > 0.0 && g.deployment_area[1] > 0.0 && g.d2d_pair_distance > 0.0) {
            return bad("deployment area and D2D distance must be positive");
        }
        Ok(())
    }

    /// Sets one scalar parameter by name; integer parameters are rounded.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidConfig(format!("{name} must be a nonnegative integer, got {v}")))
            }
        };
        match name {
            "M" | "num_bs_antennas" => self.counts.num_bs_antennas = as_count(value)?,
            "N" | "num_irs_elements" => self.counts.num_irs_elements = as_count(value)?,
            "U_I" | "num_ius" => self.counts.num_ius = as_count(value)?,
            "U_E" | "num_eus" => self.counts.num_eus = as_count(value)?,
            "K" | "num_d2d_pairs" => self.counts.num_d2d_pairs = as_count(value)?,
            "p_b_max_dbm" => self.power.p_b_max_dbm = value,
            "p_k_max_dbm" => self.power.p_k_max_dbm = value,
            "e_min_dbm" => self.power.e_min_dbm = value,
            "rho" => self.power.rho = value,
            "r_k_min_bps" => self.power.r_k_min_bps = value,
            "noise_psd_dbm_hz" => self.noise.noise_psd_dbm_hz = value,
            "bandwidth_hz" => self.noise.bandwidth_hz = value,
            "d2d_pair_distance" => self.geometry.d2d_pair_distance = value,
            "rician_factor_db" => self.channel.rician_factor_db = value,
            "rng_seed" => self.rng_seed = as_count(value)? as u64,
            _ => return Err(Error::InvalidConfig(format!("unknown parameter '{name}'"))),
        }
        self.validate()
    }

    pub fn noise_power_dbm(&self) -> f64 {
        self.noise.noise_psd_dbm_hz + 10.0 * self.noise.bandwidth_hz.log10()
    }

    pub fn noise_power_mw(&self) -> f64 {
        dbm_to_mw(self.noise_power_dbm())
    }

    pub fn p_b_max_mw(&self) -> f64 {
        dbm_to_mw(self.power.p_b_max_dbm)
    }

    pub fn p_k_max_mw(&self) -> f64 {
        dbm_to_mw(self.power.p_k_max_dbm)
    }

    pub fn e_min_mw(&self) -> f64 {
        dbm_to_mw(self.power.e_min_dbm)
    }

    /// D2D rate threshold in nats/s/Hz.
    pub fn r_k_min_nats(&self) -> f64 {
        self.power.r_k_min_bps * std::f64::consts::LN_2
    }
}

/// One realization of every channel in the network.
///
/// Vectors are stored as the column channels of the system model, e.g.
/// `h_bs_iu[i]` is `h_(B,d_i)` and the received row is its conjugate transpose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    /// `G`, `N × M`, physical units.
    pub bs_to_irs: Vec<Vec<C64>>,
    pub bs_to_iu: Vec<Vec<C64>>,
    pub bs_to_eu: Vec<Vec<C64>>,
    pub bs_to_d2drx: Vec<Vec<C64>>,
    pub irs_to_iu: Vec<Vec<C64>>,
    pub irs_to_eu: Vec<Vec<C64>>,
    pub irs_to_d2drx: Vec<Vec<C64>>,
    /// `h_(k,r)`, physical units.
    pub d2dtx_to_irs: Vec<Vec<C64>>,
    /// `h_k`.
    pub d2d_direct: Vec<C64>,
    /// `d2d_cross[l][k]` is `g_(l,k)`; the diagonal is unused and zero.
    pub d2d_cross: Vec<Vec<C64>>,
    /// `d2dtx_to_iu[k][i]` is `g_(k,d_i)`.
    pub d2dtx_to_iu: Vec<Vec<C64>>,
    /// `d2dtx_to_eu[k][j]` is `g_(k,e_j)`.
    pub d2dtx_to_eu: Vec<Vec<C64>>,
    pub noise_power_mw: f64,
}

impl ChannelSet {
    pub fn m(&self) -> usize {
        self.bs_to_iu.first().map_or(0, Vec::len)
    }

    pub fn n(&self) -> usize {
        self.bs_to_irs.len()
    }

    pub fn num_ius(&self) -> usize {
        self.bs_to_iu.len()
    }

    pub fn num_eus(&self) -> usize {
        self.bs_to_eu.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.d2d_direct.len()
    }

    /// Checks internal dimensional consistency and finiteness.
    pub fn validate(&self) -> Result<()> {
        let (m, n, ui, ue, k) = (self.m(), self.n(), self.num_ius(), self.num_eus(), self.num_pairs());
        let dim = |ok: bool, what: &str| if ok { Ok(()) } else { Err(Error::Dimension(what.to_string())) };
        let all_len = |v: &[Vec<C64>], len: usize| v.iter().all(|r| r.len() == len);
        dim(self.bs_to_irs.iter().all(|r| r.len() == m), "G must be N x M")?;
        dim(all_len(&self.bs_to_iu, m) && all_len(&self.bs_to_eu, m) && all_len(&self.bs_to_d2drx, m), "BS vectors must have M entries")?;
        dim(self.bs_to_d2drx.len() == k && self.irs_to_d2drx.len() == k && self.d2dtx_to_irs.len() == k, "per-pair vectors")?;
        dim(self.irs_to_iu.len() == ui && self.irs_to_eu.len() == ue, "IRS-to-user vectors")?;
        dim(
            all_len(&self.irs_to_iu, n) && all_len(&self.irs_to_eu, n) && all_len(&self.irs_to_d2drx, n) && all_len(&self.d2dtx_to_irs, n),
            "IRS vectors must have N entries",
        )?;
        dim(self.d2d_cross.len() == k && all_len(&self.d2d_cross, k), "D2D cross matrix must be K x K")?;
        dim(self.d2dtx_to_iu.len() == k && all_len(&self.d2dtx_to_iu, ui), "D2D-to-IU matrix must be K x U_I")?;
        dim(self.d2dtx_to_eu.len() == k && all_len(&self.d2dtx_to_eu, ue), "D2D-to-EU matrix must be K x U_E")?;
        let finite = self
            .bs_to_irs
            .iter()
            .chain(&self.bs_to_iu)
            .chain(&self.bs_to_eu)
            .chain(&self.bs_to_d2drx)
            .chain(&self.irs_to_iu)
            .chain(&self.irs_to_eu)
            .chain(&self.irs_to_d2drx)
            .chain(&self.d2dtx_to_irs)
            .chain(&self.d2d_cross)
            .chain(&self.d2dtx_to_iu)
            .chain(&self.d2dtx_to_eu)
            .flatten()
            .chain(&self.d2d_direct)
            .all(|z| z.re.is_finite() && z.im.is_finite());
        dim(finite && self.noise_power_mw > 0.0, "channels must be finite")
    }

    /// Versioned JSON snapshot.
    pub fn to_snapshot(&self) -> String {
        serde_json::to_string(&Snapshot { format: SNAPSHOT_FORMAT.into(), version: SNAPSHOT_VERSION, channels: self.clone() })
            .expect("channels serialize")
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let snap: Snapshot = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if snap.format != SNAPSHOT_FORMAT || snap.version != SNAPSHOT_VERSION {
            return Err(Error::Parse(format!("unsupported snapshot {} v{}", snap.format, snap.version)));
        }
        snap.channels.validate()?;
        Ok(snap.channels)
    }
}

const SNAPSHOT_FORMAT: &str = "ded2d-channels";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Snapshot {
    format: String,
    version: u32,
    channels: ChannelSet,
}

/// Node positions of one realization, in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub ius: Vec<[f64; 3]>,
    pub eus: Vec<[f64; 3]>,
    pub d2d_tx: Vec<[f64; 3]>,
    pub d2d_rx: Vec<[f64; 3]>,
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// `G_BS + G_IRS − 35.9 − 22·log10(d)` in dB.
pub fn bs_irs_gain_db(cfg: &ScenarioConfig, d: f64) -> f64 {
    cfg.channel.antenna_gain_bs_dbi + cfg.channel.element_gain_irs_dbi - 35.9 - 22.0 * d.log10()
}

/// Path loss `30 + 10·γ·log10(d)` in dB.
pub fn path_loss_db(gamma: f64, d: f64) -> f64 {
    30.0 + 10.0 * gamma * d.log10()
}

/// Amplitude gain corresponding to a path loss in dB.
pub fn amplitude(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 20.0)
}

const MIN_DISTANCE: f64 = 1.0;
const REDRAW_BUDGET: usize = 100;

#[derive(Clone, Copy)]
#[repr(u64)]
enum Stream {
    PosIu = 1,
    PosEu,
    PosD2d,
    GAngles,
    BsIu,
    BsEu,
    BsD2d,
    IrsIu,
    IrsEu,
    IrsD2d,
    D2dIrs,
    D2dDirect,
    D2dCross,
    D2dIu,
    D2dEu,
}

fn stream_rng(seed: u64, kind: Stream, a: usize, b: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((kind as u64) << 48) | ((a as u64) << 24) | b as u64);
    rng
}

fn cn01(rng: &mut ChaCha8Rng) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

fn rayleigh(rng: &mut ChaCha8Rng, len: usize, amp: f64) -> Vec<C64> {
    (0..len).map(|_| cn01(rng) * amp).collect()
}

fn rician(rng: &mut ChaCha8Rng, len: usize, amp: f64, k_db: f64) -> Vec<C64> {
    let k = 10f64.powf(k_db / 10.0);
    let los = C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
    let (a, b) = ((k / (1.0 + k)).sqrt(), (1.0 / (1.0 + k)).sqrt());
    (0..len).map(|_| (los * a + cn01(rng) * b) * amp).collect()
}

/// LoS BS-to-IRS matrix without large-scale gain; entries have unit modulus.
pub fn los_matrix(seed: u64, n: usize, m: usize) -> Vec<Vec<C64>> {
    (0..n)
        .map(|row| {
            let mut rng = stream_rng(seed, Stream::GAngles, row, 0);
            let theta = rng.gen_range(0.0..PI);
            let phi = rng.gen_range(0.0..2.0 * PI);
            let (theta_b, phi_b) = (PI - theta, PI + phi);
            let rx = row as f64 * theta_b.sin() * phi_b.sin();
            let tx = theta.sin() * phi.sin();
            (0..m).map(|col| C64::from_polar(1.0, PI * (rx + col as f64 * tx))).collect()
        })
        .collect()
}

fn place(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Result<[f64; 3]> {
    let area = cfg.geometry.deployment_area;
    for _ in 0..REDRAW_BUDGET {
        let p = [rng.gen_range(0.0..area[0]), rng.gen_range(0.0..area[1]), 0.0];
        if distance(p, cfg.geometry.bs_position) >= MIN_DISTANCE && distance(p, cfg.geometry.irs_position) >= MIN_DISTANCE {
            return Ok(p);
        }
    }
    Err(Error::Geometry(REDRAW_BUDGET))
}

/// Draws node positions; D2D receivers sit at `d2d_pair_distance` from their
/// transmitter in a random direction that keeps them inside the area.
pub fn generate_placement(cfg: &ScenarioConfig, seed: u64) -> Result<Placement> {
    let c = &cfg.counts;
    let ius = (0..c.num_ius).map(|i| place(cfg, &mut stream_rng(seed, Stream::PosIu, i, 0))).collect::<Result<_>>()?;
    let eus = (0..c.num_eus).map(|j| place(cfg, &mut stream_rng(seed, Stream::PosEu, j, 0))).collect::<Result<_>>()?;
    let area = cfg.geometry.deployment_area;
    let dist = cfg.geometry.d2d_pair_distance;
    let (mut d2d_tx, mut d2d_rx) = (Vec::new(), Vec::new());
    for k in 0..c.num_d2d_pairs {
        let mut rng = stream_rng(seed, Stream::PosD2d, k, 0);
        let mut found = None;
        for _ in 0..REDRAW_BUDGET {
            let tx = place(cfg, &mut rng)?;
            let ang = rng.gen_range(0.0..2.0 * PI);
            let rx = [tx[0] + dist * ang.cos(), tx[1] + dist * ang.sin(), 0.0];
            let inside = (0.0..=area[0]).contains(&rx[0]) && (0.0..=area[1]).contains(&rx[1]);
            if inside && distance(rx, cfg.geometry.bs_position) >= MIN_DISTANCE && distance(rx, cfg.geometry.irs_position) >= MIN_DISTANCE {
                found = Some((tx, rx));
                break;
            }
        }
        let (tx, rx) = found.ok_or(Error::Geometry(REDRAW_BUDGET))?;
        d2d_tx.push(tx);
        d2d_rx.push(rx);
    }
    Ok(Placement { ius, eus, d2d_tx, d2d_rx })
}

/// Generates one channel realization. Deterministic in `(cfg, seed)`.
pub fn generate_channels(cfg: &ScenarioConfig, seed: u64) -> Result<ChannelSet> {
    cfg.validate()?;
    let pl = generate_placement(cfg, seed)?;
    Ok(channels_for_placement(cfg, seed, &pl))
}

pub fn channels_for_placement(cfg: &ScenarioConfig, seed: u64, pl: &Placement) -> ChannelSet {
    let c = &cfg.counts;
    let (m, n) = (c.num_bs_antennas, c.num_irs_elements);
    let ch = &cfg.channel;
    let (bs, irs) = (cfg.geometry.bs_position, cfg.geometry.irs_position);
    let noise = cfg.noise_power_mw();
    let inv_sigma = 1.0 / noise.sqrt();
    let ray = |d: f64| amplitude(path_loss_db(ch.pathloss_exponent_rayleigh, d));

    let g_amp = 10f64.powf(bs_irs_gain_db(cfg, distance(bs, irs)) / 20.0);
    let bs_to_irs = los_matrix(seed, n, m).into_iter().map(|r| r.into_iter().map(|z| z * g_amp).collect()).collect();

    let bs_to_iu = pl.ius.iter().enumerate().map(|(i, &p)| rayleigh(&mut stream_rng(seed, Stream::BsIu, i, 0), m, ray(distance(bs, p)) * inv_sigma)).collect();
    let bs_to_eu = pl
        .eus
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let amp = amplitude(path_loss_db(ch.pathloss_exponent_rician, distance(bs, p)));
            rician(&mut stream_rng(seed, Stream::BsEu, j, 0), m, amp * inv_sigma, ch.rician_factor_db)
        })
        .collect();
    let bs_to_d2drx = pl.d2d_rx.iter().enumerate().map(|(k, &p)| rayleigh(&mut stream_rng(seed, Stream::BsD2d, k, 0), m, ray(distance(bs, p)) * inv_sigma)).collect();
    let irs_to_iu = pl.ius.iter().enumerate().map(|(i, &p)| rayleigh(&mut stream_rng(seed, Stream::IrsIu, i, 0), n, ray(distance(irs, p)) * inv_sigma)).collect();
    let irs_to_eu = pl.eus.iter().enumerate().map(|(j, &p)| rayleigh(&mut stream_rng(seed, Stream::IrsEu, j, 0), n, ray(distance(irs, p)) * inv_sigma)).collect();
    let irs_to_d2drx = pl.d2d_rx.iter().enumerate().map(|(k, &p)| rayleigh(&mut stream_rng(seed, Stream::IrsD2d, k, 0), n, ray(distance(irs, p)) * inv_sigma)).collect();
    let d2dtx_to_irs = pl.d2d_tx.iter().enumerate().map(|(k, &p)| rayleigh(&mut stream_rng(seed, Stream::D2dIrs, k, 0), n, ray(distance(p, irs)))).collect();

    let scalar = |kind: Stream, a: usize, b: usize, d: f64| cn01(&mut stream_rng(seed, kind, a, b)) * ray(d) * inv_sigma;
    let kk = pl.d2d_tx.len();
    let d2d_direct = (0..kk).map(|k| scalar(Stream::D2dDirect, k, 0, distance(pl.d2d_tx[k], pl.d2d_rx[k]))).collect();
    let d2d_cross = (0..kk)
        .map(|l| (0..kk).map(|k| if l == k { C64::new(0.0, 0.0) } else { scalar(Stream::D2dCross, l, k, distance(pl.d2d_tx[l], pl.d2d_rx[k])) }).collect())
        .collect();
    let d2dtx_to_iu = (0..kk).map(|k| pl.ius.iter().enumerate().map(|(i, &p)| scalar(Stream::D2dIu, k, i, distance(pl.d2d_tx[k], p))).collect()).collect();
    let d2dtx_to_eu = (0..kk).map(|k| pl.eus.iter().enumerate().map(|(j, &p)| scalar(Stream::D2dEu, k, j, distance(pl.d2d_tx[k], p))).collect()).collect();

    ChannelSet {
        bs_to_irs,
        bs_to_iu,
        bs_to_eu,
        bs_to_d2drx,
        irs_to_iu,
        irs_to_eu,
        irs_to_d2drx,
        d2dtx_to_irs,
        d2d_direct,
        d2d_cross,
        d2dtx_to_iu,
        d2dtx_to_eu,
        noise_power_mw: noise,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_gives_defaults() {
        assert_eq!(ScenarioConfig::from_toml_str("").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(ScenarioConfig::from_toml_str("[counts]\nbogus = 3\n").is_err());
    }

    #[test]
    fn noise_power_is_minus_104_dbm() {
        assert!((ScenarioConfig::default().noise_power_dbm() + 104.0).abs() < 1e-12);
    }

    #[test]
    fn set_param_rejects_fractional_counts() {
        let mut c = ScenarioConfig::default();
        assert!(c.set_param("N", 2.5).is_err());
        c.set_param("N", 20.0).unwrap();
        assert_eq!(c.counts.num_irs_elements, 20);
    }
}

//! Random network instances: one macrocell with an MBS at the origin, small
//! cells and IoT devices dropped uniformly on the disc, log-distance pathloss
//! with frozen log-normal shadowing, and per-device task lists.
//!
//! Generation uses one random sub-stream per entity (device, small cell,
//! device shadowing row). An instance with `U` devices is therefore a prefix of
//! the instance with `U + 1` devices drawn from the same seed, which keeps
//! density sweeps comparable cell to cell.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::substream;

/// Bits per kilobyte (decimal).
pub const BITS_PER_KB: f64 = 8000.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// `PL(ℓ) = intercept + slope · log10(ℓ)` in dB, ℓ in km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLoss {
    pub intercept_db: f64,
    pub slope_db: f64,
}

impl PathLoss {
    pub const MACRO: PathLoss = PathLoss { intercept_db: 128.1, slope_db: 37.6 };
    pub const SMALL: PathLoss = PathLoss { intercept_db: 140.7, slope_db: 36.7 };

    pub fn loss_db(&self, distance_km: f64) -> f64 {
        self.intercept_db + self.slope_db * distance_km.log10()
    }
}

/// Linear power gain for a total attenuation in dB.
pub fn gain_from_db(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Resolved scenario parameters, all in SI units (W, Hz, bit, s, J, cycles)
/// except distances, which stay in km as the pathloss formulas expect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RawScenarioConfig", try_from = "RawScenarioConfig")]
pub struct ScenarioConfig {
    pub num_imds: usize,
    pub num_sbs: usize,
    pub num_tasks: usize,
    pub cell_radius_km: f64,
    pub bandwidth_hz: f64,
    pub noise_power_w: f64,
    pub backhaul_rate_bps: f64,
    pub imd_cpu_hz: f64,
    pub sbs_cpu_hz: f64,
    pub mbs_cpu_hz: f64,
    /// Effective switched capacitance of the device chip (J·s²/cycle³).
    pub kappa_chip: f64,
    pub cycle_energy_sbs_j: f64,
    pub cycle_energy_mbs_j: f64,
    pub wired_power_w: f64,
    pub deadline_range_s: (f64, f64),
    pub data_range_bits: (f64, f64),
    pub cycles_per_bit_range: (f64, f64),
    pub p_max_w: f64,
    pub theta: f64,
    pub mbs_pathloss: PathLoss,
    pub sbs_pathloss: PathLoss,
    pub shadowing_std_db: f64,
    pub min_distance_km: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_imds: 35,
            num_sbs: 35,
            num_tasks: 3,
            cell_radius_km: 0.5,
            bandwidth_hz: 20e6,
            noise_power_w: 1e-14,
            backhaul_rate_bps: 1e9,
            imd_cpu_hz: 1e9,
            sbs_cpu_hz: 20e9,
            mbs_cpu_hz: 20e9,
            kappa_chip: 1e-25,
            cycle_energy_sbs_j: 1e-9,
            cycle_energy_mbs_j: 1e-9,
            wired_power_w: 1e-3,
            deadline_range_s: (5.0, 10.0),
            data_range_bits: (200.0 * BITS_PER_KB, 500.0 * BITS_PER_KB),
            cycles_per_bit_range: (50.0, 100.0),
            p_max_w: dbm_to_watts(23.0),
            theta: 1e-20,
            mbs_pathloss: PathLoss::MACRO,
            sbs_pathloss: PathLoss::SMALL,
            shadowing_std_db: 8.0,
            min_distance_km: 0.01,
            seed: 1,
        }
    }
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite and > 0, got {value}")))
    }
}

fn ordered(field: &str, (lo, hi): (f64, f64)) -> Result<()> {
    positive(field, lo)?;
    positive(field, hi)?;
    if lo <= hi {
        Ok(())
    } else {
        Err(Error::config(field, format!("lower bound {lo} exceeds upper bound {hi}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, n) in
            [("num_imds", self.num_imds), ("num_sbs", self.num_sbs), ("num_tasks", self.num_tasks)]
        {
            if n == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        positive("cell_radius_km", self.cell_radius_km)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("noise_power_w", self.noise_power_w)?;
        positive("backhaul_rate_bps", self.backhaul_rate_bps)?;
        positive("imd_cpu_hz", self.imd_cpu_hz)?;
        positive("sbs_cpu_hz", self.sbs_cpu_hz)?;
        positive("mbs_cpu_hz", self.mbs_cpu_hz)?;
        positive("kappa_chip", self.kappa_chip)?;
        positive("cycle_energy_sbs_j", self.cycle_energy_sbs_j)?;
        positive("cycle_energy_mbs_j", self.cycle_energy_mbs_j)?;
        positive("wired_power_w", self.wired_power_w)?;
        ordered("deadline_range_s", self.deadline_range_s)?;
        ordered("data_range_bits", self.data_range_bits)?;
        ordered("cycles_per_bit_range", self.cycles_per_bit_range)?;
        positive("p_max_w", self.p_max_w)?;
        positive("theta", self.theta)?;
        if self.theta > self.p_max_w || self.theta > self.data_range_bits.0 || self.theta >= 1.0 {
            return Err(Error::config("theta", "must lie below every upper bound it floors"));
        }
        if !(self.shadowing_std_db.is_finite() && self.shadowing_std_db >= 0.0) {
            return Err(Error::config("shadowing_std_db", "must be finite and >= 0"));
        }
        positive("min_distance_km", self.min_distance_km)?;
        for (field, pl) in [("mbs_pathloss", self.mbs_pathloss), ("sbs_pathloss", self.sbs_pathloss)]
        {
            if !(pl.intercept_db.is_finite() && pl.slope_db.is_finite()) {
                return Err(Error::config(field, "coefficients must be finite"));
            }
        }
        Ok(())
    }

    /// Parses a flat JSON object. SI keys and their unit-suffixed convenience
    /// twins (`bandwidth_mhz`, `p_max_dbm`, ...) are both accepted, but not both
    /// for the same quantity.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::config("<json>", e.to_string()))?;
        raw.resolve()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The same configuration expressed with convenience-unit keys only.
    pub fn to_convenience(&self) -> RawScenarioConfig {
        RawScenarioConfig {
            num_imds: Some(self.num_imds),
            num_sbs: Some(self.num_sbs),
            num_tasks: Some(self.num_tasks),
            cell_radius_km: Some(self.cell_radius_km),
            bandwidth_mhz: Some(self.bandwidth_hz / 1e6),
            noise_power_dbm: Some(watts_to_dbm(self.noise_power_w)),
            backhaul_rate_gbps: Some(self.backhaul_rate_bps / 1e9),
            imd_cpu_ghz: Some(self.imd_cpu_hz / 1e9),
            sbs_cpu_ghz: Some(self.sbs_cpu_hz / 1e9),
            mbs_cpu_ghz: Some(self.mbs_cpu_hz / 1e9),
            kappa_chip: Some(self.kappa_chip),
            cycle_energy_sbs_w_per_ghz: Some(self.cycle_energy_sbs_j * 1e9),
            cycle_energy_mbs_w_per_ghz: Some(self.cycle_energy_mbs_j * 1e9),
            wired_power_mw: Some(self.wired_power_w * 1e3),
            deadline_min_s: Some(self.deadline_range_s.0),
            deadline_max_s: Some(self.deadline_range_s.1),
            data_min_kb: Some(self.data_range_bits.0 / BITS_PER_KB),
            data_max_kb: Some(self.data_range_bits.1 / BITS_PER_KB),
            cycles_per_bit_min: Some(self.cycles_per_bit_range.0),
            cycles_per_bit_max: Some(self.cycles_per_bit_range.1),
            p_max_dbm: Some(watts_to_dbm(self.p_max_w)),
            theta: Some(self.theta),
            mbs_pathloss_intercept_db: Some(self.mbs_pathloss.intercept_db),
            mbs_pathloss_slope_db: Some(self.mbs_pathloss.slope_db),
            sbs_pathloss_intercept_db: Some(self.sbs_pathloss.intercept_db),
            sbs_pathloss_slope_db: Some(self.sbs_pathloss.slope_db),
            shadowing_std_db: Some(self.shadowing_std_db),
            min_distance_km: Some(self.min_distance_km),
            seed: Some(self.seed),
            ..RawScenarioConfig::default()
        }
    }
}

/// Wire form of [`ScenarioConfig`]: a flat object where every key is optional
/// and missing keys fall back to the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenarioConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_imds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_sbs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_tasks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell_radius_km: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_power_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backhaul_rate_bps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backhaul_rate_gbps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imd_cpu_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imd_cpu_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sbs_cpu_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sbs_cpu_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mbs_cpu_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mbs_cpu_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_chip: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_energy_sbs_j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_energy_sbs_w_per_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_energy_mbs_j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_energy_mbs_w_per_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wired_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wired_power_mw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deadline_min_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deadline_max_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_min_bits: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_min_kb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_max_bits: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_max_kb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycles_per_bit_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycles_per_bit_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mbs_pathloss_intercept_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mbs_pathloss_slope_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sbs_pathloss_intercept_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sbs_pathloss_slope_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shadowing_std_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_distance_km: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Picks the SI value or converts the convenience value; both set is an error.
fn pick(
    si: Option<f64>,
    si_key: &str,
    alt: Option<f64>,
    alt_key: &str,
    convert: impl Fn(f64) -> f64,
    default: f64,
) -> Result<f64> {
    match (si, alt) {
        (Some(_), Some(_)) => Err(Error::config(
            si_key,
            format!("given twice (also as `{alt_key}`); use one unit"),
        )),
        (Some(v), None) => Ok(v),
        (None, Some(v)) => Ok(convert(v)),
        (None, None) => Ok(default),
    }
}

impl RawScenarioConfig {
    pub fn resolve(self) -> Result<ScenarioConfig> {
        let d = ScenarioConfig::default();
        let cfg = ScenarioConfig {
            num_imds: self.num_imds.unwrap_or(d.num_imds),
            num_sbs: self.num_sbs.unwrap_or(d.num_sbs),
            num_tasks: self.num_tasks.unwrap_or(d.num_tasks),
            cell_radius_km: self.cell_radius_km.unwrap_or(d.cell_radius_km),
            bandwidth_hz: pick(
                self.bandwidth_hz,
                "bandwidth_hz",
                self.bandwidth_mhz,
                "bandwidth_mhz",
                |v| v * 1e6,
                d.bandwidth_hz,
            )?,
            noise_power_w: pick(
                self.noise_power_w,
                "noise_power_w",
                self.noise_power_dbm,
                "noise_power_dbm",
                dbm_to_watts,
                d.noise_power_w,
            )?,
            backhaul_rate_bps: pick(
                self.backhaul_rate_bps,
                "backhaul_rate_bps",
                self.backhaul_rate_gbps,
                "backhaul_rate_gbps",
                |v| v * 1e9,
                d.backhaul_rate_bps,
            )?,
            imd_cpu_hz: pick(
                self.imd_cpu_hz,
                "imd_cpu_hz",
                self.imd_cpu_ghz,
                "imd_cpu_ghz",
                |v| v * 1e9,
                d.imd_cpu_hz,
            )?,
            sbs_cpu_hz: pick(
                self.sbs_cpu_hz,
                "sbs_cpu_hz",
                self.sbs_cpu_ghz,
                "sbs_cpu_ghz",
                |v| v * 1e9,
                d.sbs_cpu_hz,
            )?,
            mbs_cpu_hz: pick(
                self.mbs_cpu_hz,
                "mbs_cpu_hz",
                self.mbs_cpu_ghz,
                "mbs_cpu_ghz",
                |v| v * 1e9,
                d.mbs_cpu_hz,
            )?,
            kappa_chip: self.kappa_chip.unwrap_or(d.kappa_chip),
            cycle_energy_sbs_j: pick(
                self.cycle_energy_sbs_j,
                "cycle_energy_sbs_j",
                self.cycle_energy_sbs_w_per_ghz,
                "cycle_energy_sbs_w_per_ghz",
                |v| v * 1e-9,
                d.cycle_energy_sbs_j,
            )?,
            cycle_energy_mbs_j: pick(
                self.cycle_energy_mbs_j,
                "cycle_energy_mbs_j",
                self.cycle_energy_mbs_w_per_ghz,
                "cycle_energy_mbs_w_per_ghz",
                |v| v * 1e-9,
                d.cycle_energy_mbs_j,
            )?,
            wired_power_w: pick(
                self.wired_power_w,
                "wired_power_w",
                self.wired_power_mw,
                "wired_power_mw",
                |v| v * 1e-3,
                d.wired_power_w,
            )?,
            deadline_range_s: (
                self.deadline_min_s.unwrap_or(d.deadline_range_s.0),
                self.deadline_max_s.unwrap_or(d.deadline_range_s.1),
            ),
            data_range_bits: (
                pick(
                    self.data_min_bits,
                    "data_min_bits",
                    self.data_min_kb,
                    "data_min_kb",
                    |v| v * BITS_PER_KB,
                    d.data_range_bits.0,
                )?,
                pick(
                    self.data_max_bits,
                    "data_max_bits",
                    self.data_max_kb,
                    "data_max_kb",
                    |v| v * BITS_PER_KB,
                    d.data_range_bits.1,
                )?,
            ),
            cycles_per_bit_range: (
                self.cycles_per_bit_min.unwrap_or(d.cycles_per_bit_range.0),
                self.cycles_per_bit_max.unwrap_or(d.cycles_per_bit_range.1),
            ),
            p_max_w: pick(self.p_max_w, "p_max_w", self.p_max_dbm, "p_max_dbm", dbm_to_watts, d.p_max_w)?,
            theta: self.theta.unwrap_or(d.theta),
            mbs_pathloss: PathLoss {
                intercept_db: self.mbs_pathloss_intercept_db.unwrap_or(d.mbs_pathloss.intercept_db),
                slope_db: self.mbs_pathloss_slope_db.unwrap_or(d.mbs_pathloss.slope_db),
            },
            sbs_pathloss: PathLoss {
                intercept_db: self.sbs_pathloss_intercept_db.unwrap_or(d.sbs_pathloss.intercept_db),
                slope_db: self.sbs_pathloss_slope_db.unwrap_or(d.sbs_pathloss.slope_db),
            },
            shadowing_std_db: self.shadowing_std_db.unwrap_or(d.shadowing_std_db),
            min_distance_km: self.min_distance_km.unwrap_or(d.min_distance_km),
            seed: self.seed.unwrap_or(d.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl TryFrom<RawScenarioConfig> for ScenarioConfig {
    type Error = Error;

    fn try_from(raw: RawScenarioConfig) -> Result<Self> {
        raw.resolve()
    }
}

impl From<ScenarioConfig> for RawScenarioConfig {
    fn from(c: ScenarioConfig) -> Self {
        RawScenarioConfig {
            num_imds: Some(c.num_imds),
            num_sbs: Some(c.num_sbs),
            num_tasks: Some(c.num_tasks),
            cell_radius_km: Some(c.cell_radius_km),
            bandwidth_hz: Some(c.bandwidth_hz),
            noise_power_w: Some(c.noise_power_w),
            backhaul_rate_bps: Some(c.backhaul_rate_bps),
            imd_cpu_hz: Some(c.imd_cpu_hz),
            sbs_cpu_hz: Some(c.sbs_cpu_hz),
            mbs_cpu_hz: Some(c.mbs_cpu_hz),
            kappa_chip: Some(c.kappa_chip),
            cycle_energy_sbs_j: Some(c.cycle_energy_sbs_j),
            cycle_energy_mbs_j: Some(c.cycle_energy_mbs_j),
            wired_power_w: Some(c.wired_power_w),
            deadline_min_s: Some(c.deadline_range_s.0),
            deadline_max_s: Some(c.deadline_range_s.1),
            data_min_bits: Some(c.data_range_bits.0),
            data_max_bits: Some(c.data_range_bits.1),
            cycles_per_bit_min: Some(c.cycles_per_bit_range.0),
            cycles_per_bit_max: Some(c.cycles_per_bit_range.1),
            p_max_w: Some(c.p_max_w),
            theta: Some(c.theta),
            mbs_pathloss_intercept_db: Some(c.mbs_pathloss.intercept_db),
            mbs_pathloss_slope_db: Some(c.mbs_pathloss.slope_db),
            sbs_pathloss_intercept_db: Some(c.sbs_pathloss.intercept_db),
            sbs_pathloss_slope_db: Some(c.sbs_pathloss.slope_db),
            shadowing_std_db: Some(c.shadowing_std_db),
            min_distance_km: Some(c.min_distance_km),
            seed: Some(c.seed),
            ..RawScenarioConfig::default()
        }
    }
}

/// A frozen network instance. Base-station index 0 is the MBS, `1..=S̄` the SBSs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: ScenarioConfig,
    /// Device positions in km, MBS at the origin.
    pub imd_positions: Vec<[f64; 2]>,
    pub bs_positions: Vec<[f64; 2]>,
    /// `U × (S̄+1)` link distances in km, already floored at `min_distance_km`.
    pub distance_km: Vec<Vec<f64>>,
    /// `U × (S̄+1)` linear power gains.
    pub gain: Vec<Vec<f64>>,
    /// `U × K` task sizes in bits.
    pub task_bits: Vec<Vec<f64>>,
    /// `U × K` computation intensities in cycles/bit.
    pub cycles_per_bit: Vec<Vec<f64>>,
    pub deadline_s: Vec<f64>,
}

impl Scenario {
    pub fn num_imds(&self) -> usize {
        self.imd_positions.len()
    }

    pub fn num_sbs(&self) -> usize {
        self.bs_positions.len() - 1
    }

    pub fn num_tasks(&self) -> usize {
        self.config.num_tasks
    }

    pub fn theta(&self) -> f64 {
        self.config.theta
    }

    pub fn task_cycles(&self, imd: usize, task: usize) -> f64 {
        self.task_bits[imd][task] * self.cycles_per_bit[imd][task]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }
}

const TAG_IMD: u64 = 1;
const TAG_SBS: u64 = 2;
const TAG_SHADOW: u64 = 3;

fn uniform_disc(rng: &mut impl Rng, radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    [r * phi.cos(), r * phi.sin()]
}

fn uniform_in(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let u = config.num_imds;
    let s = config.num_sbs;
    let k = config.num_tasks;

    let mut bs_positions = Vec::with_capacity(s + 1);
    bs_positions.push([0.0, 0.0]);
    for j in 1..=s {
        let mut rng = substream(config.seed, TAG_SBS, j as u64);
        bs_positions.push(uniform_disc(&mut rng, config.cell_radius_km));
    }

    let shadowing = Normal::new(0.0, config.shadowing_std_db).expect("std validated");
    let mut imd_positions = Vec::with_capacity(u);
    let mut task_bits = Vec::with_capacity(u);
    let mut cycles_per_bit = Vec::with_capacity(u);
    let mut deadline_s = Vec::with_capacity(u);
    let mut distance_km = Vec::with_capacity(u);
    let mut gain = Vec::with_capacity(u);
    for i in 0..u {
        let mut rng = substream(config.seed, TAG_IMD, i as u64);
        let pos = uniform_disc(&mut rng, config.cell_radius_km);
        let mut bits = Vec::with_capacity(k);
        let mut cpb = Vec::with_capacity(k);
        for _ in 0..k {
            bits.push(uniform_in(&mut rng, config.data_range_bits));
            cpb.push(uniform_in(&mut rng, config.cycles_per_bit_range));
        }
        deadline_s.push(uniform_in(&mut rng, config.deadline_range_s));

        let mut shadow_rng = substream(config.seed, TAG_SHADOW, i as u64);
        let mut dist_row = Vec::with_capacity(s + 1);
        let mut gain_row = Vec::with_capacity(s + 1);
        for (j, bs) in bs_positions.iter().enumerate() {
            let raw = ((pos[0] - bs[0]).powi(2) + (pos[1] - bs[1]).powi(2)).sqrt();
            let dist = raw.max(config.min_distance_km);
            let tier = if j == 0 { config.mbs_pathloss } else { config.sbs_pathloss };
            let shadow = if config.shadowing_std_db > 0.0 {
                shadowing.sample(&mut shadow_rng)
            } else {
                0.0
            };
            dist_row.push(dist);
            gain_row.push(gain_from_db(tier.loss_db(dist) + shadow));
        }

        imd_positions.push(pos);
        task_bits.push(bits);
        cycles_per_bit.push(cpb);
        distance_km.push(dist_row);
        gain.push(gain_row);
    }

    Ok(Scenario {
        config: config.clone(),
        imd_positions,
        bs_positions,
        distance_km,
        gain,
        task_bits,
        cycles_per_bit,
        deadline_s,
    })
}

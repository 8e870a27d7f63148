//! Communication, computation and multi-task cost model.
//!
//! Given a decoded [`Solution`] this module computes uplink rates under the
//! tier/cell band split, proportional CPU shares at the device, the small cells
//! and the macro cell, per-task completion time and energy for local execution
//! and one- or two-step offloading, and the penalized fitness used by the
//! search stages.
//!
//! A CPU share whose numerator is zero (nothing to run at that server) is zero
//! and contributes zero time and energy, so `0/0` never reaches the arithmetic.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Decision variables. `assoc[i] == 0` means device `i` is served by the MBS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub assoc: Vec<usize>,
    /// Transmit power per device (W).
    pub power: Vec<f64>,
    /// `U × K` bits offloaded to the serving base station.
    pub first_hop: Vec<Vec<f64>>,
    /// `U × K` bits forwarded from the serving SBS to the MBS. Carried but
    /// unused for MBS-served devices.
    pub second_hop: Vec<Vec<f64>>,
    /// Fraction of the band reserved for the macro tier.
    pub lambda: f64,
}

impl Solution {
    /// Association indicator `x_ij`.
    pub fn indicator(&self, imd: usize, bs: usize) -> bool {
        self.assoc[imd] == bs
    }

    /// Devices attached to each base station, index 0 = MBS.
    pub fn bs_loads(&self, num_sbs: usize) -> Vec<usize> {
        let mut n = vec![0; num_sbs + 1];
        for &b in &self.assoc {
            n[b] += 1;
        }
        n
    }
}

/// Per-device penalty weights `α_i` for deadline violations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub penalty_factors: Vec<f64>,
}

impl EvalConfig {
    pub const DEFAULT_PENALTY: f64 = 10.0;

    pub fn uniform(num_imds: usize, alpha: f64) -> Self {
        Self { penalty_factors: vec![alpha; num_imds] }
    }

    pub fn for_scenario(scenario: &Scenario) -> Self {
        Self::uniform(scenario.num_imds(), Self::DEFAULT_PENALTY)
    }

    pub fn validate(&self, num_imds: usize) -> Result<()> {
        if self.penalty_factors.len() != num_imds {
            return Err(Error::config(
                "penalty_factors",
                format!("expected {num_imds} entries, got {}", self.penalty_factors.len()),
            ));
        }
        if let Some(a) = self.penalty_factors.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::config("penalty_factors", format!("must be > 0, got {a}")));
        }
        Ok(())
    }
}

/// Time and energy of one task, split into the local and the offload path.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskCost {
    pub local_time: f64,
    pub offload_time: f64,
    pub local_energy: f64,
    pub offload_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Sequential completion time of each device's task list (s).
    pub imd_time: Vec<f64>,
    pub imd_energy: Vec<f64>,
    pub total_energy: f64,
    /// Everything spent on the network side of the offload paths: uplink
    /// transmission, edge execution and wired forwarding.
    pub bs_energy: f64,
    pub local_energy: f64,
    pub penalty: f64,
    pub fitness: f64,
    pub supported: Vec<bool>,
    pub tasks: Vec<Vec<TaskCost>>,
}

impl Evaluation {
    pub fn support_ratio(&self) -> f64 {
        let n = self.supported.iter().filter(|s| **s).count();
        n as f64 / self.supported.len() as f64
    }
}

/// Checks the box and ordering constraints on a decoded solution.
pub fn check_feasible(scenario: &Scenario, sol: &Solution) -> Result<()> {
    let u = scenario.num_imds();
    let k = scenario.num_tasks();
    let s = scenario.num_sbs();
    let theta = scenario.theta();
    let p_max = scenario.config.p_max_w;
    let shape_ok = sol.assoc.len() == u
        && sol.power.len() == u
        && sol.first_hop.len() == u
        && sol.second_hop.len() == u
        && sol.first_hop.iter().chain(&sol.second_hop).all(|row| row.len() == k);
    if !shape_ok {
        return Err(Error::Infeasible(format!("solution shape does not match {u} devices x {k} tasks")));
    }
    if !(theta..=1.0).contains(&sol.lambda) {
        return Err(Error::Infeasible(format!("band split {} outside [theta, 1]", sol.lambda)));
    }
    for i in 0..u {
        if sol.assoc[i] > s {
            return Err(Error::Infeasible(format!("device {i} associated with unknown BS {}", sol.assoc[i])));
        }
        if !(theta..=p_max).contains(&sol.power[i]) {
            return Err(Error::Infeasible(format!("device {i} power {} outside [theta, p_max]", sol.power[i])));
        }
        for t in 0..k {
            let d = scenario.task_bits[i][t];
            let first = sol.first_hop[i][t];
            if !(theta..=d).contains(&first) {
                return Err(Error::Infeasible(format!("device {i} task {t}: offload {first} outside [theta, {d}]")));
            }
            if sol.assoc[i] >= 1 {
                let second = sol.second_hop[i][t];
                if !(theta..=first).contains(&second) {
                    return Err(Error::Infeasible(format!(
                        "device {i} task {t}: forwarded {second} outside [theta, {first}]"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn share(part: f64, total: f64, capacity: f64) -> f64 {
    if part > 0.0 && total > 0.0 {
        capacity * part / total
    } else {
        0.0
    }
}

fn exec_time(cycles: f64, rate: f64) -> f64 {
    if cycles > 0.0 {
        cycles / rate
    } else {
        0.0
    }
}

fn spectral_efficiency(power: f64, gain: f64, noise: f64) -> f64 {
    // ln_1p keeps θ-level SNRs strictly positive where log2(1 + γ) rounds to 0.
    (power * gain / noise).ln_1p() / LN_2
}

/// Aggregates that couple devices: per-BS device counts and the cycle pools the
/// proportional server shares are computed against.
struct Loads {
    devices: Vec<usize>,
    sbs_cycles: Vec<f64>,
    mbs_cycles: f64,
}

impl Loads {
    fn new(scenario: &Scenario, sol: &Solution) -> Self {
        let s = scenario.num_sbs();
        let mut sbs_cycles = vec![0.0; s + 1];
        let mut mbs_cycles = 0.0;
        for (i, &b) in sol.assoc.iter().enumerate() {
            for t in 0..scenario.num_tasks() {
                let c = scenario.cycles_per_bit[i][t];
                if b == 0 {
                    mbs_cycles += sol.first_hop[i][t] * c;
                } else {
                    sbs_cycles[b] += (sol.first_hop[i][t] - sol.second_hop[i][t]) * c;
                    mbs_cycles += sol.second_hop[i][t] * c;
                }
            }
        }
        Self { devices: sol.bs_loads(s), sbs_cycles, mbs_cycles }
    }
}

fn sbs_rate(scenario: &Scenario, sol: &Solution, loads: &Loads, i: usize, j: usize) -> f64 {
    let cfg = &scenario.config;
    // The small-cell band is floored at θ like λ itself, so λ = 1 stays finite.
    let band = (1.0 - sol.lambda).max(cfg.theta) * cfg.bandwidth_hz
        / (scenario.num_sbs() as f64 * loads.devices[j] as f64);
    band * spectral_efficiency(sol.power[i], scenario.gain[i][j], cfg.noise_power_w)
}

fn mbs_rate(scenario: &Scenario, sol: &Solution, loads: &Loads, i: usize) -> f64 {
    let cfg = &scenario.config;
    let band = sol.lambda * cfg.bandwidth_hz / loads.devices[0] as f64;
    band * spectral_efficiency(sol.power[i], scenario.gain[i][0], cfg.noise_power_w)
}

fn local_shares(scenario: &Scenario, sol: &Solution, i: usize) -> Vec<f64> {
    let remaining: Vec<f64> = (0..scenario.num_tasks())
        .map(|t| (scenario.task_bits[i][t] - sol.first_hop[i][t]) * scenario.cycles_per_bit[i][t])
        .collect();
    let total: f64 = remaining.iter().sum();
    remaining.iter().map(|r| share(*r, total, scenario.config.imd_cpu_hz)).collect()
}

fn mbs_task_cycles(scenario: &Scenario, sol: &Solution, i: usize, t: usize) -> f64 {
    let bits = if sol.assoc[i] == 0 { sol.first_hop[i][t] } else { sol.second_hop[i][t] };
    bits * scenario.cycles_per_bit[i][t]
}

fn task_cost(scenario: &Scenario, sol: &Solution, loads: &Loads, f_local: f64, i: usize, t: usize) -> TaskCost {
    let cfg = &scenario.config;
    let c = scenario.cycles_per_bit[i][t];
    let first = sol.first_hop[i][t];
    let remaining = (scenario.task_bits[i][t] - first) * c;
    let local_time = exec_time(remaining, f_local);
    let local_energy = cfg.kappa_chip * remaining * f_local * f_local;

    let mbs_cycles = mbs_task_cycles(scenario, sol, i, t);
    let f_mbs = share(mbs_cycles, loads.mbs_cycles, cfg.mbs_cpu_hz);
    let (offload_time, offload_energy) = match sol.assoc[i] {
        0 => {
            let upload = first / mbs_rate(scenario, sol, loads, i);
            let time = upload + exec_time(mbs_cycles, f_mbs);
            let energy = sol.power[i] * upload + mbs_cycles * cfg.cycle_energy_mbs_j;
            (time, energy)
        }
        j => {
            let second = sol.second_hop[i][t];
            let retained = (first - second) * c;
            let f_sbs = share(retained, loads.sbs_cycles[j], cfg.sbs_cpu_hz);
            let upload = first / sbs_rate(scenario, sol, loads, i, j);
            let backhaul = second / cfg.backhaul_rate_bps;
            let time = upload + exec_time(retained, f_sbs) + backhaul + exec_time(mbs_cycles, f_mbs);
            let energy = sol.power[i] * upload
                + retained * cfg.cycle_energy_sbs_j
                + cfg.wired_power_w * backhaul
                + mbs_cycles * cfg.cycle_energy_mbs_j;
            (time, energy)
        }
    };
    TaskCost { local_time, offload_time, local_energy, offload_energy }
}

/// Uplink rate of device `i` to small cell `j` (bit/s). Requires `assoc[i] == j`.
pub fn uplink_rate_sbs(scenario: &Scenario, sol: &Solution, i: usize, j: usize) -> f64 {
    assert!(j >= 1 && sol.assoc[i] == j, "device {i} is not served by SBS {j}");
    sbs_rate(scenario, sol, &Loads::new(scenario, sol), i, j)
}

/// Uplink rate of MBS-served device `i` (bit/s).
pub fn uplink_rate_mbs(scenario: &Scenario, sol: &Solution, i: usize) -> f64 {
    assert_eq!(sol.assoc[i], 0, "device {i} is not served by the MBS");
    mbs_rate(scenario, sol, &Loads::new(scenario, sol), i)
}

/// Device CPU frequency given to each of device `i`'s tasks (cycles/s).
pub fn local_cpu_allocation(scenario: &Scenario, sol: &Solution, i: usize) -> Vec<f64> {
    local_shares(scenario, sol, i)
}

/// Share of the serving SBS's CPU given to task `t` of device `i`.
pub fn sbs_cpu_allocation(scenario: &Scenario, sol: &Solution, i: usize, t: usize) -> f64 {
    let j = sol.assoc[i];
    assert!(j >= 1, "device {i} is not served by an SBS");
    let loads = Loads::new(scenario, sol);
    let retained = (sol.first_hop[i][t] - sol.second_hop[i][t]) * scenario.cycles_per_bit[i][t];
    share(retained, loads.sbs_cycles[j], scenario.config.sbs_cpu_hz)
}

/// Share of the MBS CPU given to task `t` of device `i`, whichever route the
/// data took to get there.
pub fn mbs_cpu_allocation(scenario: &Scenario, sol: &Solution, i: usize, t: usize) -> f64 {
    let loads = Loads::new(scenario, sol);
    share(mbs_task_cycles(scenario, sol, i, t), loads.mbs_cycles, scenario.config.mbs_cpu_hz)
}

pub fn task_time_energy(scenario: &Scenario, sol: &Solution, i: usize, t: usize) -> TaskCost {
    let loads = Loads::new(scenario, sol);
    let f_local = local_shares(scenario, sol, i)[t];
    task_cost(scenario, sol, &loads, f_local, i, t)
}

/// Evaluates a feasible solution. Infeasible input is a contract violation and
/// is reported, not repaired.
pub fn evaluate(scenario: &Scenario, sol: &Solution, cfg: &EvalConfig) -> Result<Evaluation> {
    check_feasible(scenario, sol)?;
    cfg.validate(scenario.num_imds())?;
    let loads = Loads::new(scenario, sol);
    let u = scenario.num_imds();

    let mut imd_time = Vec::with_capacity(u);
    let mut imd_energy = Vec::with_capacity(u);
    let mut tasks = Vec::with_capacity(u);
    let mut supported = Vec::with_capacity(u);
    let (mut total_energy, mut bs_energy, mut local_energy, mut penalty) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..u {
        let shares = local_shares(scenario, sol, i);
        let costs: Vec<TaskCost> =
            shares.iter().enumerate().map(|(t, f)| task_cost(scenario, sol, &loads, *f, i, t)).collect();
        let time: f64 = costs.iter().map(|c| c.local_time.max(c.offload_time)).sum();
        let energy: f64 = costs.iter().map(|c| c.local_energy + c.offload_energy).sum();
        bs_energy += costs.iter().map(|c| c.offload_energy).sum::<f64>();
        local_energy += costs.iter().map(|c| c.local_energy).sum::<f64>();
        total_energy += energy;
        let deadline = scenario.deadline_s[i];
        penalty += cfg.penalty_factors[i] * (time - deadline).max(0.0);
        supported.push(time <= deadline);
        imd_time.push(time);
        imd_energy.push(energy);
        tasks.push(costs);
    }

    Ok(Evaluation {
        imd_time,
        imd_energy,
        total_energy,
        bs_energy,
        local_energy,
        penalty,
        fitness: -total_energy - penalty,
        supported,
        tasks,
    })
}

//! Adaptive particle swarm with per-particle inertia and guaranteed-convergence
//! resampling around the global best.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{project_in_place, Block, GeneDomain, GeneVector, Velocity};
use crate::error::{Error, Result};
use crate::ga::diversity;
use crate::objective::{argmax, mean, Problem};
use crate::trace::{SolverTrace, Stage, TraceRow};

/// How the resampling offset `β(1 − 2δ)` is scaled per gene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationScale {
    /// Multiplied by the gene's domain width.
    Normalized,
    /// Added as is, in the gene's own units.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub iterations: usize,
    pub cognitive: f64,
    pub social: f64,
    /// Weight of the old velocity when resampling the global best particle.
    pub resample_inertia: f64,
    pub inertia_max: f64,
    pub inertia_min: f64,
    pub beta_initial: f64,
    pub success_threshold: u32,
    pub failure_threshold: u32,
    pub perturbation: PerturbationScale,
    /// Shared linear inertia decay, no resampling, no β adaptation.
    pub traditional_mode: bool,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            cognitive: 2.0,
            social: 2.0,
            resample_inertia: 0.72,
            inertia_max: 0.9,
            inertia_min: 0.4,
            beta_initial: 1.0,
            success_threshold: 15,
            failure_threshold: 5,
            perturbation: PerturbationScale::Normalized,
            traditional_mode: false,
        }
    }
}

impl PsoConfig {
    pub fn traditional() -> Self {
        Self { traditional_mode: true, ..Self::default() }
    }

    // Negated comparisons so NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.cognitive > 0.0) {
            return Err(Error::config("cognitive", "must be positive"));
        }
        if !(self.social > 0.0) {
            return Err(Error::config("social", "must be positive"));
        }
        if !(self.inertia_min < self.inertia_max) {
            return Err(Error::config("inertia_min", "must be below inertia_max"));
        }
        if !(self.beta_initial > 0.0 && self.beta_initial.is_finite()) {
            return Err(Error::config("beta_initial", "must be positive and finite"));
        }
        if !self.resample_inertia.is_finite() {
            return Err(Error::config("resample_inertia", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Swarm {
    pub positions: Vec<GeneVector>,
    pub velocities: Vec<Velocity>,
    pub fitness: Vec<f64>,
    pub inertia: Vec<f64>,
    pub pbest: Vec<GeneVector>,
    pub pbest_velocity: Vec<Velocity>,
    pub pbest_fitness: Vec<f64>,
    pub gbest: GeneVector,
    pub gbest_fitness: f64,
    /// Particle whose personal best is the global best.
    pub gbest_owner: usize,
    pub beta: f64,
    pub successes: u32,
    pub failures: u32,
    pub iteration: usize,
}

impl Swarm {
    /// Positions from `initial`, zero velocities, personal bests at the start.
    pub fn new(initial: Vec<GeneVector>, fitness: Vec<f64>, cfg: &PsoConfig) -> Self {
        assert!(!initial.is_empty(), "swarm needs at least one particle");
        let velocities: Vec<Velocity> = initial.iter().map(|g| Velocity::zeros(g.layout())).collect();
        let owner = argmax(&fitness);
        Self {
            inertia: vec![cfg.inertia_max; initial.len()],
            pbest: initial.clone(),
            pbest_velocity: velocities.clone(),
            pbest_fitness: fitness.clone(),
            gbest: initial[owner].clone(),
            gbest_fitness: fitness[owner],
            gbest_owner: owner,
            positions: initial,
            velocities,
            fitness,
            beta: cfg.beta_initial,
            successes: 0,
            failures: 0,
            iteration: 0,
        }
    }

    /// Compounding inertia step of `t (κmax − κmin) / T`: up for the global
    /// best owner, down for everyone else, clamped to the bounds.
    pub fn update_inertia(&mut self, cfg: &PsoConfig, t: usize) {
        if cfg.traditional_mode {
            let k = linear_inertia(cfg, t);
            self.inertia.iter_mut().for_each(|x| *x = k);
            return;
        }
        let step = inertia_step(cfg, t);
        for (z, k) in self.inertia.iter_mut().enumerate() {
            let next = if z == self.gbest_owner { *k + step } else { *k - step };
            *k = next.clamp(cfg.inertia_min, cfg.inertia_max);
        }
    }

    pub fn update_velocities(&mut self, cfg: &PsoConfig, rng: &mut impl Rng) {
        for z in 0..self.positions.len() {
            let kappa = self.inertia[z];
            let x = self.positions[z].genes();
            let p = self.pbest[z].genes();
            let g = self.gbest.genes();
            let v = self.velocities[z].genes_mut();
            for i in 0..v.len() {
                let (r, r_hat) = (rng.random(), rng.random());
                v[i] = velocity_step(kappa, v[i], p[i] - x[i], g[i] - x[i], r, r_hat, cfg);
            }
        }
    }

    pub fn update_positions(&mut self, domain: &GeneDomain) {
        for (x, v) in self.positions.iter_mut().zip(&self.velocities) {
            move_particle(x, v.genes(), domain);
        }
    }

    /// Personal and global best refresh after `fitness` has been set.
    pub fn update_bests(&mut self) {
        for z in 0..self.positions.len() {
            self.offer(z);
        }
    }

    fn offer(&mut self, z: usize) {
        if self.fitness[z] > self.pbest_fitness[z] {
            self.pbest_fitness[z] = self.fitness[z];
            self.pbest[z] = self.positions[z].clone();
            self.pbest_velocity[z] = self.velocities[z].clone();
        }
        if self.pbest_fitness[z] > self.gbest_fitness {
            self.gbest_fitness = self.pbest_fitness[z];
            self.gbest = self.pbest[z].clone();
            self.gbest_owner = z;
        }
    }

    /// Moves the global best owner to `gbest + w·v + β(1 − 2δ)` with explicit
    /// per-gene `δ`. Returns the owner index.
    pub fn resample_gbest_with(&mut self, cfg: &PsoConfig, domain: &GeneDomain, delta: &[f64]) -> usize {
        let z = self.gbest_owner;
        let n = self.gbest.layout().len();
        assert_eq!(delta.len(), n);
        let mut target = self.gbest.clone();
        for (i, d) in delta.iter().enumerate() {
            let scale = match cfg.perturbation {
                PerturbationScale::Normalized => domain.width(i),
                PerturbationScale::Raw => 1.0,
            };
            target.genes_mut()[i] +=
                cfg.resample_inertia * self.velocities[z].genes()[i] + self.beta * (1.0 - 2.0 * d) * scale;
        }
        for (v, (t, x)) in
            self.velocities[z].genes_mut().iter_mut().zip(target.genes().iter().zip(self.positions[z].genes()))
        {
            *v = t - x;
        }
        project_in_place(&mut target, domain);
        self.positions[z] = target;
        z
    }

    /// Draws `δ` (shared by association and power per device, by both hops
    /// per virtual device) and resamples the global best owner.
    pub fn resample_gbest(&mut self, cfg: &PsoConfig, domain: &GeneDomain, rng: &mut impl Rng) -> usize {
        let delta = draw_deltas(self.gbest.layout(), rng);
        self.resample_gbest_with(cfg, domain, &delta)
    }

    /// Success when the global best fitness moved since `previous`.
    pub fn update_beta(&mut self, cfg: &PsoConfig, previous: f64) -> f64 {
        if self.gbest_fitness != previous {
            self.successes += 1;
            self.failures = 0;
        } else {
            self.failures += 1;
            self.successes = 0;
        }
        self.beta = next_beta(self.beta, self.successes, self.failures, cfg);
        self.beta
    }
}

fn move_particle(x: &mut GeneVector, v: &[f64], domain: &GeneDomain) {
    for (xi, vi) in x.genes_mut().iter_mut().zip(v) {
        *xi += vi;
    }
    for b in x.block_mut(Block::Assoc) {
        *b = b.round();
    }
    project_in_place(x, domain);
}

fn draw_deltas(layout: crate::encoding::Layout, rng: &mut impl Rng) -> Vec<f64> {
    let mut delta = vec![0.0; layout.len()];
    let (assoc, power) = (layout.range(Block::Assoc), layout.range(Block::Power));
    for i in 0..layout.imds {
        let d = rng.random();
        delta[assoc.start + i] = d;
        delta[power.start + i] = d;
    }
    let (first, second) = (layout.range(Block::FirstHop), layout.range(Block::SecondHop));
    for v in 0..layout.virtual_len() {
        let d = rng.random();
        delta[first.start + v] = d;
        delta[second.start + v] = d;
    }
    delta[layout.range(Block::BandSplit).start] = rng.random();
    delta
}

pub fn inertia_step(cfg: &PsoConfig, t: usize) -> f64 {
    t as f64 * (cfg.inertia_max - cfg.inertia_min) / cfg.iterations.max(1) as f64
}

pub fn linear_inertia(cfg: &PsoConfig, t: usize) -> f64 {
    cfg.inertia_max - (cfg.inertia_max - cfg.inertia_min) * t as f64 / cfg.iterations.max(1) as f64
}

/// Scalar velocity update `κv + w1·r·(pbest − x) + w2·r̂·(gbest − x)`.
pub fn velocity_step(
    kappa: f64,
    v: f64,
    to_pbest: f64,
    to_gbest: f64,
    r: f64,
    r_hat: f64,
    cfg: &PsoConfig,
) -> f64 {
    kappa * v + cfg.cognitive * r * to_pbest + cfg.social * r_hat * to_gbest
}

pub fn next_beta(beta: f64, successes: u32, failures: u32, cfg: &PsoConfig) -> f64 {
    if successes > cfg.success_threshold {
        2.0 * beta
    } else if failures > cfg.failure_threshold {
        0.5 * beta
    } else {
        beta
    }
}

fn trace_row(swarm: &Swarm, cfg: &PsoConfig, domain: &GeneDomain) -> TraceRow {
    TraceRow {
        stage: Stage::Pso,
        iteration: swarm.iteration,
        best_fitness: swarm.gbest_fitness,
        mean_fitness: mean(&swarm.fitness),
        diversity: diversity(&swarm.positions, domain),
        beta: (!cfg.traditional_mode).then_some(swarm.beta),
    }
}

pub fn run_pso(
    problem: &Problem,
    cfg: &PsoConfig,
    initial: Vec<GeneVector>,
    rng: &mut impl Rng,
) -> Result<(Swarm, SolverTrace)> {
    cfg.validate()?;
    if initial.is_empty() {
        return Err(Error::config("initial_population", "must not be empty"));
    }
    let domain = &problem.domain;
    let mut initial = initial;
    initial.iter_mut().for_each(|g| project_in_place(g, domain));
    let fitness = problem.fitness_all(&initial);
    let mut swarm = Swarm::new(initial, fitness, cfg);
    let mut trace = SolverTrace { rows: vec![trace_row(&swarm, cfg, domain)] };

    for t in 1..=cfg.iterations {
        let previous = swarm.gbest_fitness;
        swarm.update_inertia(cfg, t);
        swarm.update_velocities(cfg, rng);
        swarm.update_positions(domain);
        swarm.fitness = problem.fitness_all(&swarm.positions);
        swarm.update_bests();
        if !cfg.traditional_mode {
            // The resampled position is scored right away; otherwise the next
            // velocity step would move it before it was ever evaluated.
            let z = swarm.resample_gbest(cfg, domain, rng);
            swarm.fitness[z] = problem.fitness(&swarm.positions[z]);
            swarm.offer(z);
            swarm.update_beta(cfg, previous);
        }
        swarm.iteration = t;
        trace.rows.push(trace_row(&swarm, cfg, domain));
    }
    Ok((swarm, trace))
}

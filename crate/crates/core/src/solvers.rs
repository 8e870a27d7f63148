//! Solver drivers: HAS (adaptive GA then adaptive PSO), HGP (the same
//! hierarchy in traditional mode) and the CMT / CM baselines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encoding::{decode, encode, GeneVector, Layout};
use crate::error::{Error, Result};
use crate::ga::{run_ga, GaConfig};
use crate::objective::{argmin, Problem};
use crate::pso::{run_pso, PsoConfig};
use crate::scenario::Scenario;
use crate::seeding::rng_from_seed;
use crate::sysmodel::{evaluate, EvalConfig, Evaluation, Solution};
use crate::trace::SolverTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Has,
    Hgp,
    Cmt,
    Cm,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::Has, SolverKind::Hgp, SolverKind::Cmt, SolverKind::Cm];

    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Has => "has",
            SolverKind::Hgp => "hgp",
            SolverKind::Cmt => "cmt",
            SolverKind::Cm => "cm",
        }
    }

    pub fn is_search(self) -> bool {
        matches!(self, SolverKind::Has | SolverKind::Hgp)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config("solver", format!("unknown solver `{s}` (has, hgp, cmt, cm)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub solver: SolverKind,
    pub seed: u64,
    /// Band split forced by the CM baseline.
    pub lambda: Option<f64>,
    pub solution: Solution,
    pub evaluation: Evaluation,
    pub trace: SolverTrace,
    pub runtime_s: f64,
}

#[cfg(not(target_arch = "wasm32"))]
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

// No monotonic clock on wasm32-unknown-unknown.
#[cfg(target_arch = "wasm32")]
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    (f(), 0.0)
}

/// GA then PSO on one RNG stream. The PSO swarm starts from the final GA
/// population with the GA historical best put in place of the worst member
/// when it is missing. Returns the better of the two stage bests.
pub fn run_hierarchy(
    problem: &Problem,
    ga: &GaConfig,
    pso: &PsoConfig,
    seed: u64,
) -> Result<(GeneVector, SolverTrace)> {
    let mut rng = rng_from_seed(seed);
    let (pop, mut trace) = run_ga(problem, ga, &mut rng)?;
    let mut swarm_init = pop.individuals;
    if !swarm_init.contains(&pop.best) {
        let w = argmin(&pop.fitness);
        swarm_init[w] = pop.best.clone();
    }
    let (swarm, pso_trace) = run_pso(problem, pso, swarm_init, &mut rng)?;
    trace.extend(pso_trace);
    let best = if swarm.gbest_fitness >= pop.best_fitness { swarm.gbest } else { pop.best };
    Ok((best, trace))
}

fn finish(
    problem: &Problem,
    solver: SolverKind,
    seed: u64,
    lambda: Option<f64>,
    solution: Solution,
    trace: SolverTrace,
    runtime_s: f64,
) -> Result<SolverResult> {
    let evaluation = evaluate(problem.scenario, &solution, problem.eval)?;
    Ok(SolverResult { solver, seed, lambda, solution, evaluation, trace, runtime_s })
}

pub fn run_has_with(problem: &Problem, ga: &GaConfig, pso: &PsoConfig, seed: u64) -> Result<SolverResult> {
    let ga = GaConfig { traditional_mode: false, ..ga.clone() };
    let pso = PsoConfig { traditional_mode: false, ..pso.clone() };
    let (out, secs) = timed(|| run_hierarchy(problem, &ga, &pso, seed));
    let (best, trace) = out?;
    finish(problem, SolverKind::Has, seed, None, decode(&best), trace, secs)
}

pub fn run_hgp_with(problem: &Problem, ga: &GaConfig, pso: &PsoConfig, seed: u64) -> Result<SolverResult> {
    let ga = GaConfig { traditional_mode: true, ..ga.clone() };
    let pso = PsoConfig { traditional_mode: true, ..pso.clone() };
    let (out, secs) = timed(|| run_hierarchy(problem, &ga, &pso, seed));
    let (best, trace) = out?;
    finish(problem, SolverKind::Hgp, seed, None, decode(&best), trace, secs)
}

pub fn run_has(
    scenario: &Scenario,
    eval: &EvalConfig,
    ga: &GaConfig,
    pso: &PsoConfig,
    seed: u64,
) -> Result<SolverResult> {
    run_has_with(&Problem::new(scenario, eval), ga, pso, seed)
}

pub fn run_hgp(
    scenario: &Scenario,
    eval: &EvalConfig,
    ga: &GaConfig,
    pso: &PsoConfig,
    seed: u64,
) -> Result<SolverResult> {
    run_hgp_with(&Problem::new(scenario, eval), ga, pso, seed)
}

/// Everything local: every offload variable at the floor θ, MBS association,
/// whole band to the macro tier.
pub fn cmt_solution(scenario: &Scenario) -> Solution {
    let (u, k, theta) = (scenario.num_imds(), scenario.num_tasks(), scenario.theta());
    Solution {
        assoc: vec![0; u],
        power: vec![theta; u],
        first_hop: vec![vec![theta; k]; u],
        second_hop: vec![vec![theta; k]; u],
        lambda: 1.0,
    }
}

/// Everything to the MBS at full power with band split `lambda`.
pub fn cm_solution(scenario: &Scenario, lambda: f64) -> Result<Solution> {
    let theta = scenario.theta();
    if !(lambda >= theta && lambda <= 1.0) {
        return Err(Error::config("lambda", format!("must lie in [{theta:e}, 1], got {lambda}")));
    }
    let u = scenario.num_imds();
    Ok(Solution {
        assoc: vec![0; u],
        power: vec![scenario.config.p_max_w; u],
        first_hop: scenario.task_bits.clone(),
        second_hop: vec![vec![theta; scenario.num_tasks()]; u],
        lambda,
    })
}

pub fn solve_cmt(scenario: &Scenario, eval: &EvalConfig) -> Result<SolverResult> {
    let problem = Problem::new(scenario, eval);
    let (sol, secs) = timed(|| cmt_solution(scenario));
    finish(&problem, SolverKind::Cmt, 0, None, sol, SolverTrace::default(), secs)
}

pub fn solve_cm(scenario: &Scenario, eval: &EvalConfig, lambda: f64) -> Result<SolverResult> {
    let problem = Problem::new(scenario, eval);
    let (sol, secs) = timed(|| cm_solution(scenario, lambda));
    finish(&problem, SolverKind::Cm, 0, Some(lambda), sol?, SolverTrace::default(), secs)
}

/// Chromosome of a solution, for seeding or inspection.
pub fn solution_genes(scenario: &Scenario, sol: &Solution) -> GeneVector {
    encode(sol, Layout::of(scenario))
}

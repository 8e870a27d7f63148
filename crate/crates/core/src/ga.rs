//! Adaptive genetic algorithm with diversity-guided mutation (DGM).
//!
//! One generation: tournament selection with the historical best re-inserted
//! over the worst pick, a DGM pass whose probability depends on population
//! diversity, adaptive crossover of neighbouring pairs, adaptive mutation,
//! then the historical-best update.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{init_genes, project_in_place, Block, GeneDomain, GeneVector};
use crate::error::{Error, Result};
use crate::objective::{argmax, argmin, mean, Problem};
use crate::trace::{SolverTrace, Stage, TraceRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub iterations: usize,
    /// Crossover coefficients: interpolated and constant branch.
    pub crossover_scale: f64,
    pub crossover_max: f64,
    /// Mutation coefficients: interpolated and constant branch.
    pub mutation_scale: f64,
    pub mutation_max: f64,
    /// DGM probability at low, medium and high diversity.
    pub dgm_low: f64,
    pub dgm_mid: f64,
    pub dgm_high: f64,
    pub diversity_low: f64,
    pub diversity_high: f64,
    pub tournament_size: usize,
    /// Fixed probabilities, no DGM.
    pub traditional_mode: bool,
    pub fixed_pc: f64,
    pub fixed_pm: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 64,
            iterations: 200,
            crossover_scale: 0.8,
            crossover_max: 0.8,
            mutation_scale: 0.3,
            mutation_max: 0.3,
            dgm_low: 0.6,
            dgm_mid: 0.03,
            dgm_high: 1e-5,
            diversity_low: 0.01,
            diversity_high: 0.25,
            tournament_size: 2,
            traditional_mode: false,
            fixed_pc: 0.8,
            fixed_pm: 0.1,
        }
    }
}

impl GaConfig {
    pub fn traditional() -> Self {
        Self { traditional_mode: true, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| Err(Error::config(field, reason));
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return bad("population_size", "must be even and at least 2");
        }
        if !unit(self.crossover_scale) {
            return bad("crossover_scale", "must lie in (0, 1]");
        }
        if !unit(self.crossover_max) {
            return bad("crossover_max", "must lie in (0, 1]");
        }
        if !(self.mutation_scale > 0.0 && self.mutation_scale < 1.0) {
            return bad("mutation_scale", "must lie in (0, 1)");
        }
        if !(self.mutation_max > 0.0 && self.mutation_max < 1.0) {
            return bad("mutation_max", "must lie in (0, 1)");
        }
        for (name, p) in [("dgm_low", self.dgm_low), ("dgm_mid", self.dgm_mid), ("dgm_high", self.dgm_high)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(name, "must lie in [0, 1]");
            }
        }
        if !(self.diversity_low > 0.0 && self.diversity_low < self.diversity_high && self.diversity_high < 1.0) {
            return bad("diversity_low", "thresholds must satisfy 0 < low < high < 1");
        }
        if self.tournament_size == 0 {
            return bad("tournament_size", "must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.fixed_pc) {
            return bad("fixed_pc", "must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.fixed_pm) {
            return bad("fixed_pm", "must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub individuals: Vec<GeneVector>,
    pub fitness: Vec<f64>,
    pub best: GeneVector,
    pub best_fitness: f64,
    pub iteration: usize,
}

impl Population {
    fn new(individuals: Vec<GeneVector>, fitness: Vec<f64>) -> Self {
        let b = argmax(&fitness);
        Self { best: individuals[b].clone(), best_fitness: fitness[b], individuals, fitness, iteration: 0 }
    }

    fn update_best(&mut self) {
        let b = argmax(&self.fitness);
        if self.fitness[b] > self.best_fitness {
            self.best_fitness = self.fitness[b];
            self.best = self.individuals[b].clone();
        }
    }
}

/// Pair crossover probability. `pair_min` is the lower fitness of the pair.
pub fn crossover_probability(pair_min: f64, f_min: f64, f_avg: f64, cfg: &GaConfig) -> f64 {
    if pair_min < f_avg && f_avg > f_min {
        cfg.crossover_scale * (pair_min - f_min) / (f_avg - f_min)
    } else {
        cfg.crossover_max
    }
}

pub fn mutation_probability(f: f64, f_max: f64, f_avg: f64, cfg: &GaConfig) -> f64 {
    if f < f_avg {
        cfg.mutation_max
    } else if f_max > f_avg {
        cfg.mutation_scale * (f_max - f) / (f_max - f_avg)
    } else {
        cfg.mutation_scale
    }
}

pub fn dgm_probability(y: f64, cfg: &GaConfig) -> f64 {
    if y < cfg.diversity_low {
        cfg.dgm_low
    } else if y < cfg.diversity_high {
        cfg.dgm_mid
    } else {
        cfg.dgm_high
    }
}

/// Mean over the five blocks of the average distance to the block centroid,
/// each normalized by the block's domain diagonal.
pub fn diversity(population: &[GeneVector], domain: &GeneDomain) -> f64 {
    let z = population.len();
    if z == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for (l, block) in Block::ALL.into_iter().enumerate() {
        let diag = domain.diagonals[l];
        if diag <= 0.0 {
            continue;
        }
        // Centroid as an offset from the first member, so identical members
        // give exactly zero spread.
        let anchor = population[0].block(block);
        let mut centroid = vec![0.0; anchor.len()];
        for g in population {
            for ((c, x), a) in centroid.iter_mut().zip(g.block(block)).zip(anchor) {
                *c += x - a;
            }
        }
        for (c, a) in centroid.iter_mut().zip(anchor) {
            *c = a + *c / z as f64;
        }
        let spread: f64 = population
            .iter()
            .map(|g| g.block(block).iter().zip(&centroid).map(|(x, c)| (x - c).powi(2)).sum::<f64>().sqrt())
            .sum();
        total += spread / (z as f64 * diag);
    }
    total / 5.0
}

/// Applies the block mutation rules with explicit `(c1, c2)` per gene, in
/// gene order. `c2 > 0.5` moves toward the upper anchor, otherwise toward the
/// lower one. Second-hop genes move relative to the already mutated first hop.
pub fn mutate_with_coefficients(genes: &mut GeneVector, domain: &GeneDomain, coeffs: &[(f64, f64)]) {
    let layout = genes.layout();
    assert_eq!(coeffs.len(), layout.len());
    let first = layout.range(Block::FirstHop);
    let second = layout.range(Block::SecondHop);
    let blend = |c1: f64, anchor: f64, x: f64| c1 * anchor + (1.0 - c1) * x;
    for (idx, &(c1, c2)) in coeffs.iter().enumerate() {
        let up = c2 > 0.5;
        let x = genes.genes()[idx];
        let next = if layout.range(Block::Assoc).contains(&idx) {
            // The lower branch anchors at 1 as written, not at the MBS index.
            if up { blend(c1, domain.max_assoc, x) } else { blend(c1, 1.0, x) }.round()
        } else if layout.range(Block::Power).contains(&idx) {
            if up { blend(c1, domain.p_max, x) } else { blend(c1, 0.0, x) }
        } else if first.contains(&idx) {
            if up { blend(c1, domain.task_bits[idx - first.start], x) } else { blend(c1, 0.0, x) }
        } else if second.contains(&idx) {
            let g = genes.genes()[first.start + idx - second.start];
            if up { blend(c1, g, x) } else { blend(c1, 0.0, x) }
        } else if up {
            blend(c1, 1.0, x)
        } else {
            blend(c1, 0.0, x)
        };
        genes.genes_mut()[idx] = next;
    }
    project_in_place(genes, domain);
}

pub fn mutate(genes: &mut GeneVector, domain: &GeneDomain, rng: &mut impl Rng) {
    let coeffs: Vec<(f64, f64)> = (0..genes.layout().len()).map(|_| (rng.random(), rng.random())).collect();
    mutate_with_coefficients(genes, domain, &coeffs);
}

/// One-point crossover at cut fraction `u`: in every block the leading
/// `floor(u * len)` genes are exchanged. First and second hop share the cut,
/// so `(g, h)` pairs travel together. The band split is exchanged if `u > 0.5`.
pub fn crossover_at(a: &mut GeneVector, b: &mut GeneVector, u: f64, domain: &GeneDomain) {
    let layout = a.layout();
    for block in [Block::Assoc, Block::Power, Block::FirstHop, Block::SecondHop] {
        let r = layout.range(block);
        let cut = ((u * r.len() as f64).floor() as usize).min(r.len());
        for idx in r.start..r.start + cut {
            std::mem::swap(&mut a.genes_mut()[idx], &mut b.genes_mut()[idx]);
        }
    }
    if u > 0.5 {
        let idx = layout.range(Block::BandSplit).start;
        std::mem::swap(&mut a.genes_mut()[idx], &mut b.genes_mut()[idx]);
    }
    project_in_place(a, domain);
    project_in_place(b, domain);
}

pub fn crossover(a: &mut GeneVector, b: &mut GeneVector, domain: &GeneDomain, rng: &mut impl Rng) {
    let u = rng.random();
    crossover_at(a, b, u, domain);
}

fn tournament(fitness: &[f64], size: usize, rng: &mut impl Rng) -> usize {
    let mut winner = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.random_range(0..fitness.len());
        if fitness[c] > fitness[winner] {
            winner = c;
        }
    }
    winner
}

fn trace_row(pop: &Population, domain: &GeneDomain) -> TraceRow {
    TraceRow {
        stage: Stage::Ga,
        iteration: pop.iteration,
        best_fitness: pop.best_fitness,
        mean_fitness: mean(&pop.fitness),
        diversity: diversity(&pop.individuals, domain),
        beta: None,
    }
}

/// Random initial population of `cfg.population_size` chromosomes.
pub fn initial_population(problem: &Problem, cfg: &GaConfig, rng: &mut impl Rng) -> Vec<GeneVector> {
    (0..cfg.population_size).map(|_| init_genes(&problem.domain, rng)).collect()
}

pub fn run_ga(problem: &Problem, cfg: &GaConfig, rng: &mut impl Rng) -> Result<(Population, SolverTrace)> {
    cfg.validate()?;
    let domain = &problem.domain;
    let individuals = initial_population(problem, cfg, rng);
    let fitness = problem.fitness_all(&individuals);
    let mut pop = Population::new(individuals, fitness);
    let mut trace = SolverTrace { rows: vec![trace_row(&pop, domain)] };

    for t in 1..=cfg.iterations {
        let z = pop.individuals.len();

        // Selection with historical-best reinsertion.
        let picks: Vec<usize> = (0..z).map(|_| tournament(&pop.fitness, cfg.tournament_size, rng)).collect();
        let mut next: Vec<GeneVector> = picks.iter().map(|&i| pop.individuals[i].clone()).collect();
        let mut next_fit: Vec<f64> = picks.iter().map(|&i| pop.fitness[i]).collect();
        if !next.contains(&pop.best) {
            let w = argmin(&next_fit);
            next[w] = pop.best.clone();
            next_fit[w] = pop.best_fitness;
        }

        if !cfg.traditional_mode {
            let pd = dgm_probability(diversity(&next, domain), cfg);
            for g in next.iter_mut() {
                if rng.random::<f64>() < pd {
                    mutate(g, domain, rng);
                }
            }
            next_fit = problem.fitness_all(&next);
        }

        let f_min = next_fit.iter().copied().fold(f64::INFINITY, f64::min);
        let f_max = next_fit.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let f_avg = mean(&next_fit);

        for pair in 0..z / 2 {
            let (i, j) = (2 * pair, 2 * pair + 1);
            let pc = if cfg.traditional_mode {
                cfg.fixed_pc
            } else {
                crossover_probability(next_fit[i].min(next_fit[j]), f_min, f_avg, cfg)
            };
            if rng.random::<f64>() < pc {
                let (left, right) = next.split_at_mut(j);
                crossover(&mut left[i], &mut right[0], domain, rng);
            }
        }

        // Mutation probability keys on each slot's fitness before crossover.
        for (g, f) in next.iter_mut().zip(&next_fit) {
            let pm = if cfg.traditional_mode { cfg.fixed_pm } else { mutation_probability(*f, f_max, f_avg, cfg) };
            if rng.random::<f64>() < pm {
                mutate(g, domain, rng);
            }
        }

        pop.fitness = problem.fitness_all(&next);
        pop.individuals = next;
        pop.iteration = t;
        pop.update_best();
        trace.rows.push(trace_row(&pop, domain));
    }
    Ok((pop, trace))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::encoding::{is_projected, Layout};
    use crate::scenario::{generate_scenario, ScenarioConfig};
    use crate::sysmodel::EvalConfig;

    fn scenario(u: usize, s: usize, k: usize) -> crate::Scenario {
        generate_scenario(&ScenarioConfig { num_imds: u, num_sbs: s, num_tasks: k, ..Default::default() }).unwrap()
    }

    #[test]
    fn crossover_probability_examples() {
        let cfg = GaConfig::default();
        assert_eq!(crossover_probability(-1.0, -5.0, -2.0, &cfg), 0.8);
        assert_eq!(crossover_probability(-5.0, -5.0, -2.0, &cfg), 0.0);
        assert!((crossover_probability(-3.5, -5.0, -2.0, &cfg) - 0.4).abs() < 1e-15);
        assert_eq!(crossover_probability(-2.0, -2.0, -2.0, &cfg), 0.8);
    }

    #[test]
    fn mutation_probability_examples() {
        let cfg = GaConfig::default();
        assert_eq!(mutation_probability(-1.0, -1.0, -3.0, &cfg), 0.0);
        assert_eq!(mutation_probability(-4.0, -1.0, -3.0, &cfg), 0.3);
        assert_eq!(mutation_probability(-3.0, -1.0, -3.0, &cfg), 0.3);
        assert_eq!(mutation_probability(-1.0, -1.0, -1.0, &cfg), 0.3);
    }

    #[test]
    fn dgm_probability_examples() {
        let cfg = GaConfig::default();
        assert_eq!(dgm_probability(0.005, &cfg), 0.6);
        assert_eq!(dgm_probability(0.1, &cfg), 0.03);
        assert_eq!(dgm_probability(0.3, &cfg), 1e-5);
        assert_eq!(dgm_probability(0.01, &cfg), 0.03);
    }

    #[test]
    fn config_validation() {
        assert!(GaConfig::default().validate().is_ok());
        let odd = GaConfig { population_size: 7, ..Default::default() };
        assert!(odd.validate().unwrap_err().is_config());
        let thresholds = GaConfig { diversity_low: 0.3, ..Default::default() };
        assert!(thresholds.validate().is_err());
        let json = r#"{"population_size": 8, "iterations": 3}"#;
        let cfg: GaConfig = serde_json::from_str(json).unwrap();
        assert_eq!((cfg.population_size, cfg.iterations, cfg.crossover_max), (8, 3, 0.8));
    }

    #[test]
    fn diversity_examples() {
        let scn = scenario(2, 2, 1);
        let dom = GeneDomain::new(&scn);
        let a = init_genes(&dom, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(diversity(&[a.clone(), a.clone(), a.clone()], &dom), 0.0);
        assert_eq!(diversity(std::slice::from_ref(&a), &dom), 0.0);

        // Two individuals: each sits half the gap from the centroid, so each
        // block contributes 2 * (|a - b| / 2) / (2 * J) = |a - b| / (2 * J).
        let b = init_genes(&dom, &mut ChaCha8Rng::seed_from_u64(2));
        let expected: f64 = Block::ALL
            .into_iter()
            .enumerate()
            .map(|(l, blk)| {
                let d = a.block(blk).iter().zip(b.block(blk)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                d / (2.0 * dom.diagonals[l])
            })
            .sum::<f64>()
            / 5.0;
        let y = diversity(&[a, b], &dom);
        assert!((y - expected).abs() <= 1e-12 * expected.abs().max(1.0), "{y} vs {expected}");
    }

    #[test]
    fn mutation_extremes() {
        let scn = scenario(2, 3, 2);
        let dom = GeneDomain::new(&scn);
        let g0 = init_genes(&dom, &mut ChaCha8Rng::seed_from_u64(4));
        let n = g0.layout().len();

        let mut same = g0.clone();
        mutate_with_coefficients(&mut same, &dom, &vec![(0.0, 0.9); n]);
        assert_eq!(same, g0);
        mutate_with_coefficients(&mut same, &dom, &vec![(0.0, 0.1); n]);
        assert_eq!(same, g0);

        let mut up = g0.clone();
        mutate_with_coefficients(&mut up, &dom, &vec![(1.0, 0.9); n]);
        assert!(up.block(Block::Power).iter().all(|q| *q == dom.p_max));
        assert_eq!(up.block(Block::FirstHop), &dom.task_bits[..]);
        assert_eq!(up.band_split(), 1.0);
        assert!(up.block(Block::Assoc).iter().all(|b| *b == 3.0));
        assert_eq!(up.block(Block::SecondHop), up.block(Block::FirstHop));

        let mut down = g0.clone();
        mutate_with_coefficients(&mut down, &dom, &vec![(1.0, 0.1); n]);
        assert!(down.block(Block::Assoc).iter().all(|b| *b == 1.0));
        assert!(down.block(Block::Power).iter().all(|q| *q == dom.theta));
        assert!(is_projected(&down, &dom));
    }

    #[test]
    fn crossover_examples() {
        let scn = scenario(2, 2, 1);
        let dom = GeneDomain::new(&scn);
        let a = init_genes(&dom, &mut ChaCha8Rng::seed_from_u64(7));
        let b = init_genes(&dom, &mut ChaCha8Rng::seed_from_u64(8));

        let (mut x, mut y) = (a.clone(), a.clone());
        crossover_at(&mut x, &mut y, 0.7, &dom);
        assert_eq!((&x, &y), (&a, &a));

        let (mut x, mut y) = (a.clone(), b.clone());
        crossover_at(&mut x, &mut y, 0.0, &dom);
        assert_eq!((&x, &y), (&a, &b));

        // u = 0.5 on a 2-device instance swaps device 0's genes, keeps λ.
        let (mut x, mut y) = (a.clone(), b.clone());
        crossover_at(&mut x, &mut y, 0.5, &dom);
        let l: Layout = a.layout();
        for blk in [Block::Assoc, Block::Power, Block::FirstHop, Block::SecondHop] {
            assert_eq!(x.block(blk)[0], b.block(blk)[0]);
            assert_eq!(x.block(blk)[1], a.block(blk)[1]);
        }
        assert_eq!(x.band_split(), a.band_split());
        for v in 0..l.virtual_len() {
            assert!(x.block(Block::SecondHop)[v] <= x.block(Block::FirstHop)[v]);
            assert!(y.block(Block::SecondHop)[v] <= y.block(Block::FirstHop)[v]);
        }
        assert_eq!(x, project(x.clone(), &dom));
    }

    use crate::encoding::project;

    fn small_problem_run(cfg: &GaConfig, seed: u64) -> (Population, SolverTrace) {
        let scn = scenario(4, 3, 2);
        let ev = EvalConfig::for_scenario(&scn);
        let problem = Problem::new(&scn, &ev);
        run_ga(&problem, cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn zero_iterations_returns_initial_population() {
        let cfg = GaConfig { population_size: 10, iterations: 0, ..Default::default() };
        let (pop, trace) = small_problem_run(&cfg, 1);
        assert_eq!(trace.rows.len(), 1);
        assert_eq!(pop.best_fitness, pop.fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }

    #[test]
    fn run_is_monotone_and_deterministic() {
        let cfg = GaConfig { population_size: 12, iterations: 25, ..Default::default() };
        let (pop, trace) = small_problem_run(&cfg, 3);
        assert!(trace.is_monotone());
        assert_eq!(trace.rows.len(), 26);
        assert_eq!(pop.individuals.len(), 12);
        let (_, again) = small_problem_run(&cfg, 3);
        assert_eq!(trace, again);
        let (_, trad) = small_problem_run(&GaConfig { traditional_mode: true, ..cfg }, 3);
        assert!(trad.is_monotone());
    }

    proptest! {
        #[test]
        fn operators_keep_chromosomes_feasible(seed in 0u64..2000, u in 0.0f64..1.0) {
            let scn = scenario(3, 2, 2);
            let dom = GeneDomain::new(&scn);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut a = init_genes(&dom, &mut rng);
            let mut b = init_genes(&dom, &mut rng);
            crossover_at(&mut a, &mut b, u, &dom);
            mutate(&mut a, &dom, &mut rng);
            prop_assert!(is_projected(&a, &dom));
            prop_assert!(is_projected(&b, &dom));
        }

        #[test]
        fn probabilities_stay_in_unit_interval(
            a in -1e3f64..0.0, b in -1e3f64..0.0, c in -1e3f64..0.0, y in 0.0f64..2.0,
        ) {
            let cfg = GaConfig::default();
            let mut f = [a, b, c];
            f.sort_by(f64::total_cmp);
            let pc = crossover_probability(f[1], f[0], f[2].min(f[1].max(f[0])), &cfg);
            prop_assert!((0.0..=1.0).contains(&pc));
            let pm = mutation_probability(f[1], f[2], f[0], &cfg);
            prop_assert!((0.0..=1.0).contains(&pm));
            let pd = dgm_probability(y, &cfg);
            prop_assert!(pd > 0.0 && pd <= 1.0);
        }
    }
}

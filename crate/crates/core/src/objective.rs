//! Chromosome fitness: decode, evaluate, optionally audit.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::encoding::{decode, GeneDomain, GeneVector};
use crate::scenario::Scenario;
use crate::sysmodel::{evaluate, EvalConfig, Evaluation, Solution};

/// Observer called with every evaluated solution. Must be thread-safe since
/// population evaluation may fan out.
pub type Audit<'a> = &'a (dyn Fn(&Solution, &Evaluation) + Sync);

pub struct Problem<'a> {
    pub scenario: &'a Scenario,
    pub eval: &'a EvalConfig,
    pub domain: GeneDomain,
    audit: Option<Audit<'a>>,
}

impl<'a> Problem<'a> {
    pub fn new(scenario: &'a Scenario, eval: &'a EvalConfig) -> Self {
        Self { scenario, eval, domain: GeneDomain::new(scenario), audit: None }
    }

    pub fn with_audit(mut self, audit: Audit<'a>) -> Self {
        self.audit = Some(audit);
        self
    }

    pub fn evaluation(&self, genes: &GeneVector) -> Evaluation {
        let sol = decode(genes);
        // Every operator projects, so a decode failure is a bug, not bad input.
        let ev = evaluate(self.scenario, &sol, self.eval).expect("projected chromosome must be feasible");
        if let Some(audit) = self.audit {
            audit(&sol, &ev);
        }
        ev
    }

    pub fn fitness(&self, genes: &GeneVector) -> f64 {
        self.evaluation(genes).fitness
    }

    /// Fitness of every chromosome, in input order.
    pub fn fitness_all(&self, population: &[GeneVector]) -> Vec<f64> {
        #[cfg(feature = "parallel")]
        {
            population.par_iter().map(|g| self.fitness(g)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            population.iter().map(|g| self.fitness(g)).collect()
        }
    }
}

/// Index of the largest value; the first one wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut worst = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[worst] {
            worst = i;
        }
    }
    worst
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

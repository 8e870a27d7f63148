use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ga,
    Pso,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ga => "ga",
            Stage::Pso => "pso",
        }
    }
}

/// One iteration of a search stage. Iteration 0 is the initial population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub stage: Stage,
    pub iteration: usize,
    /// Historical best (GA) or global best (PSO) fitness.
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub diversity: f64,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
}

impl SolverTrace {
    pub fn stage(&self, stage: Stage) -> impl Iterator<Item = &TraceRow> {
        self.rows.iter().filter(move |r| r.stage == stage)
    }

    /// True when best fitness never drops within a stage.
    pub fn is_monotone(&self) -> bool {
        [Stage::Ga, Stage::Pso].into_iter().all(|s| {
            let best: Vec<f64> = self.stage(s).map(|r| r.best_fitness).collect();
            best.windows(2).all(|w| w[1] >= w[0])
        })
    }

    pub fn extend(&mut self, other: SolverTrace) {
        self.rows.extend(other.rows);
    }
}

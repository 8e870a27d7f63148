//! Sweep harness: grid of densities and power caps, solver runs, CSV output.
//!
//! Output layout of a sweep directory:
//!
//! * `sweep.csv`: one row per (cell, seed, solver[, λ]) with columns
//!   `solver,seed,rho_ue,rho_sbs,pmax_dbm,lambda,total_energy_j,bs_energy_j,support_ratio,penalty`.
//! * `timing.csv`: the same key columns plus `runtime_s`. Wall-clock time is
//!   kept apart so that `sweep.csv` is byte-for-byte reproducible.
//! * `trace_<solver>_<seed>.csv`: per-iteration search traces with columns
//!   `solver,seed,rho_ue,rho_sbs,pmax_dbm,stage,iteration,best_fitness,mean_fitness,diversity,beta`.
//! * `manifest.json`: the resolved [`SweepSpec`]; feeding it back reproduces
//!   the run.
//!
//! Floats are written as `{:.16e}` (17 significant digits, round-trip exact).

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ga::GaConfig;
use crate::objective::Problem;
use crate::pso::PsoConfig;
use crate::scenario::{dbm_to_watts, generate_scenario, ScenarioConfig};
use crate::seeding::mix_seed;
use crate::solvers::{run_has_with, run_hgp_with, solve_cm, solve_cmt, SolverKind, SolverResult};
use crate::sysmodel::EvalConfig;
use crate::trace::TraceRow;

pub const SWEEP_COLUMNS: [&str; 10] = [
    "solver",
    "seed",
    "rho_ue",
    "rho_sbs",
    "pmax_dbm",
    "lambda",
    "total_energy_j",
    "bs_energy_j",
    "support_ratio",
    "penalty",
];

pub const METRIC_COLUMNS: [&str; 4] = ["total_energy_j", "bs_energy_j", "support_ratio", "penalty"];

pub const TRACE_COLUMNS: [&str; 11] = [
    "solver",
    "seed",
    "rho_ue",
    "rho_sbs",
    "pmax_dbm",
    "stage",
    "iteration",
    "best_fitness",
    "mean_fitness",
    "diversity",
    "beta",
];

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    /// Devices per macro cell.
    pub rho_ue: Vec<usize>,
    /// Small cells per macro cell.
    pub rho_sbs: Vec<usize>,
    pub pmax_dbm: Vec<f64>,
    pub solvers: Vec<SolverKind>,
    pub cm_lambdas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub base: ScenarioConfig,
    pub ga: GaConfig,
    pub pso: PsoConfig,
    pub penalty_factor: f64,
    /// Write per-iteration traces for the search solvers.
    pub trace: bool,
    pub out_dir: Option<PathBuf>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            rho_ue: vec![5, 15, 25, 35],
            rho_sbs: vec![35],
            pmax_dbm: vec![23.0],
            solvers: SolverKind::ALL.to_vec(),
            cm_lambdas: vec![0.25, 0.5, 0.75, 1.0],
            seeds: (1..=5).collect(),
            base: ScenarioConfig::default(),
            ga: GaConfig::default(),
            pso: PsoConfig::default(),
            penalty_factor: EvalConfig::DEFAULT_PENALTY,
            trace: true,
            out_dir: None,
        }
    }
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SweepSpec = serde_json::from_str(text).map_err(|e| Error::config("<spec>", e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let nonempty = |field: &str, len: usize| {
            if len == 0 {
                Err(Error::config(field, "must not be empty"))
            } else {
                Ok(())
            }
        };
        nonempty("rho_ue", self.rho_ue.len())?;
        nonempty("rho_sbs", self.rho_sbs.len())?;
        nonempty("pmax_dbm", self.pmax_dbm.len())?;
        nonempty("solvers", self.solvers.len())?;
        nonempty("seeds", self.seeds.len())?;
        if self.solvers.contains(&SolverKind::Cm) {
            nonempty("cm_lambdas", self.cm_lambdas.len())?;
        }
        let mut seen = HashSet::new();
        if !self.seeds.iter().all(|s| seen.insert(*s)) {
            return Err(Error::config("seeds", "seeds must be distinct"));
        }
        if !(self.penalty_factor >= 0.0 && self.penalty_factor.is_finite()) {
            return Err(Error::config("penalty_factor", "must be finite and non-negative"));
        }
        for cell in self.cells() {
            self.cell_config(&cell).validate()?;
        }
        for l in &self.cm_lambdas {
            if !(*l >= self.base.theta && *l <= 1.0) {
                return Err(Error::config("cm_lambdas", format!("{l} outside [theta, 1]")));
            }
        }
        self.ga.validate()?;
        self.pso.validate()
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &rho_ue in &self.rho_ue {
            for &rho_sbs in &self.rho_sbs {
                for &pmax_dbm in &self.pmax_dbm {
                    for &seed in &self.seeds {
                        out.push(Cell { rho_ue, rho_sbs, pmax_dbm, seed });
                    }
                }
            }
        }
        out
    }

    /// Scenario for a cell. The instance seed depends only on the base seed
    /// and the replicate, so densities share device/task draws as prefixes.
    pub fn cell_config(&self, cell: &Cell) -> ScenarioConfig {
        ScenarioConfig {
            num_imds: cell.rho_ue,
            num_sbs: cell.rho_sbs,
            p_max_w: dbm_to_watts(cell.pmax_dbm),
            seed: mix_seed(&[self.base.seed, cell.seed]),
            ..self.base.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub rho_ue: usize,
    pub rho_sbs: usize,
    pub pmax_dbm: f64,
    pub seed: u64,
}

impl Cell {
    /// Seed of the search RNG stream for this cell.
    pub fn solver_seed(&self) -> u64 {
        mix_seed(&[self.seed, self.rho_ue as u64, self.rho_sbs as u64, self.pmax_dbm.to_bits()])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub solver: SolverKind,
    pub seed: u64,
    pub rho_ue: usize,
    pub rho_sbs: usize,
    pub pmax_dbm: f64,
    pub lambda: Option<f64>,
    pub total_energy_j: f64,
    pub bs_energy_j: f64,
    pub support_ratio: f64,
    pub penalty: f64,
    pub runtime_s: f64,
}

impl MetricsRow {
    pub fn from_result(cell: &Cell, res: &SolverResult) -> Self {
        Self {
            solver: res.solver,
            seed: cell.seed,
            rho_ue: cell.rho_ue,
            rho_sbs: cell.rho_sbs,
            pmax_dbm: cell.pmax_dbm,
            lambda: res.lambda,
            total_energy_j: res.evaluation.total_energy,
            bs_energy_j: res.evaluation.bs_energy,
            support_ratio: res.evaluation.support_ratio(),
            penalty: res.evaluation.penalty,
            runtime_s: res.runtime_s,
        }
    }

    fn key_fields(&self) -> Vec<String> {
        vec![
            self.solver.to_string(),
            self.seed.to_string(),
            self.rho_ue.to_string(),
            self.rho_sbs.to_string(),
            fmt_float(self.pmax_dbm),
            self.lambda.map(fmt_float).unwrap_or_default(),
        ]
    }

    pub fn record(&self) -> Vec<String> {
        let mut r = self.key_fields();
        r.extend([self.total_energy_j, self.bs_energy_j, self.support_ratio, self.penalty].map(fmt_float));
        r
    }
}

/// Everything one cell produces, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct CellOutput {
    pub cell: Cell,
    pub results: Vec<SolverResult>,
}

pub fn run_cell(spec: &SweepSpec, cell: &Cell) -> Result<CellOutput> {
    let scenario = generate_scenario(&spec.cell_config(cell))?;
    let eval = EvalConfig::uniform(cell.rho_ue, spec.penalty_factor);
    let problem = Problem::new(&scenario, &eval);
    let mut results = Vec::new();
    for &solver in &spec.solvers {
        match solver {
            SolverKind::Has => results.push(run_has_with(&problem, &spec.ga, &spec.pso, cell.solver_seed())?),
            SolverKind::Hgp => results.push(run_hgp_with(&problem, &spec.ga, &spec.pso, cell.solver_seed())?),
            SolverKind::Cmt => results.push(solve_cmt(&scenario, &eval)?),
            SolverKind::Cm => {
                for &l in &spec.cm_lambdas {
                    results.push(solve_cm(&scenario, &eval, l)?);
                }
            }
        }
    }
    for r in &mut results {
        r.seed = cell.seed;
    }
    Ok(CellOutput { cell: *cell, results })
}

/// Runs every cell. Cells may run concurrently; output order is the grid order.
pub fn run_cells(spec: &SweepSpec) -> Result<Vec<CellOutput>> {
    spec.validate()?;
    let cells = spec.cells();
    #[cfg(feature = "parallel")]
    let outputs: Vec<Result<CellOutput>> = cells.par_iter().map(|c| run_cell(spec, c)).collect();
    #[cfg(not(feature = "parallel"))]
    let outputs: Vec<Result<CellOutput>> = cells.iter().map(|c| run_cell(spec, c)).collect();
    outputs.into_iter().collect()
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub out_dir: PathBuf,
    pub rows: Vec<MetricsRow>,
    pub trace_files: Vec<PathBuf>,
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn trace_record(solver: SolverKind, cell: &Cell, row: &TraceRow) -> Vec<String> {
    vec![
        solver.to_string(),
        cell.seed.to_string(),
        cell.rho_ue.to_string(),
        cell.rho_sbs.to_string(),
        fmt_float(cell.pmax_dbm),
        row.stage.as_str().to_string(),
        row.iteration.to_string(),
        fmt_float(row.best_fitness),
        fmt_float(row.mean_fitness),
        fmt_float(row.diversity),
        row.beta.map(fmt_float).unwrap_or_default(),
    ]
}

/// Runs the sweep and writes all outputs under `out_dir` (created if missing).
pub fn run_sweep(spec: &SweepSpec, out_dir: &Path) -> Result<SweepReport> {
    let outputs = run_cells(spec)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let rows: Vec<MetricsRow> =
        outputs.iter().flat_map(|o| o.results.iter().map(|r| MetricsRow::from_result(&o.cell, r))).collect();
    write_csv(&out_dir.join("sweep.csv"), &SWEEP_COLUMNS, rows.iter().map(MetricsRow::record))?;

    let mut timing_header: Vec<&str> = SWEEP_COLUMNS[..6].to_vec();
    timing_header.push("runtime_s");
    write_csv(
        &out_dir.join("timing.csv"),
        &timing_header,
        rows.iter().map(|r| {
            let mut rec = r.key_fields();
            rec.push(fmt_float(r.runtime_s));
            rec
        }),
    )?;

    let mut trace_files = Vec::new();
    if spec.trace {
        let mut per_file: BTreeMap<(String, u64), Vec<Vec<String>>> = BTreeMap::new();
        for o in &outputs {
            for r in o.results.iter().filter(|r| r.solver.is_search()) {
                per_file
                    .entry((r.solver.to_string(), o.cell.seed))
                    .or_default()
                    .extend(r.trace.rows.iter().map(|row| trace_record(r.solver, &o.cell, row)));
            }
        }
        for ((solver, seed), recs) in per_file {
            let path = out_dir.join(format!("trace_{solver}_{seed}.csv"));
            write_csv(&path, &TRACE_COLUMNS, recs)?;
            trace_files.push(path);
        }
    }

    let manifest = SweepSpec { out_dir: Some(out_dir.to_path_buf()), ..spec.clone() };
    let path = out_dir.join("manifest.json");
    fs::write(&path, manifest.to_json() + "\n").map_err(|e| Error::io(&path, e))?;

    Ok(SweepReport { out_dir: out_dir.to_path_buf(), rows, trace_files })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub group: Vec<String>,
    pub metric: String,
    pub count: usize,
    pub median: f64,
    pub mean: f64,
    pub std: f64,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Median, mean and sample standard deviation of every metric column per
/// group. Groups appear in first-seen order.
pub fn summarize(csv_text: &str, group_by: &[String]) -> Result<Vec<SummaryRow>> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Parse { column: "<header>".into(), reason: e.to_string() })?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse { column: name.to_string(), reason: "missing column".into() })
    };
    let key_idx: Vec<usize> = group_by.iter().map(|k| col(k)).collect::<Result<_>>()?;
    let metric_idx: Vec<usize> = METRIC_COLUMNS.iter().map(|m| col(m)).collect::<Result<_>>()?;

    let mut order: Vec<Vec<String>> = Vec::new();
    let mut groups: BTreeMap<Vec<String>, Vec<Vec<f64>>> = BTreeMap::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse { column: "<row>".into(), reason: e.to_string() })?;
        let key: Vec<String> = key_idx.iter().map(|&i| rec.get(i).unwrap_or_default().to_string()).collect();
        let mut values = Vec::with_capacity(metric_idx.len());
        for (&i, name) in metric_idx.iter().zip(METRIC_COLUMNS) {
            let raw = rec.get(i).unwrap_or_default();
            let v: f64 = raw.trim().parse().map_err(|_| Error::Parse {
                column: name.to_string(),
                reason: format!("row {}: `{raw}` is not a number", line + 2),
            })?;
            values.push(v);
        }
        let entry = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            vec![Vec::new(); METRIC_COLUMNS.len()]
        });
        for (bucket, v) in entry.iter_mut().zip(values) {
            bucket.push(v);
        }
    }

    let mut out = Vec::new();
    for key in order {
        for (m, mut xs) in groups.remove(&key).unwrap().into_iter().enumerate() {
            xs.sort_by(f64::total_cmp);
            let n = xs.len();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
            out.push(SummaryRow {
                group: key.clone(),
                metric: METRIC_COLUMNS[m].to_string(),
                count: n,
                median: median(&xs),
                mean,
                std: var.sqrt(),
            });
        }
    }
    Ok(out)
}

pub fn summary_to_csv(group_by: &[String], rows: &[SummaryRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = group_by.iter().map(String::as_str).collect();
    header.extend(["metric", "count", "median", "mean", "std"]);
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        let mut rec = r.group.clone();
        rec.push(r.metric.clone());
        rec.push(r.count.to_string());
        rec.extend([r.median, r.mean, r.std].map(fmt_float));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

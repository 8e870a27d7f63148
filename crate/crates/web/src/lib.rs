//! Browser bindings. Each export takes a JSON options string and returns a
//! JSON string, so the page needs no generated TypeScript types.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use mec_offload::experiment::{run_cells, Cell, SweepSpec};
use mec_offload::ga::GaConfig;
use mec_offload::pso::PsoConfig;
use mec_offload::scenario::generate_scenario;
use mec_offload::solvers::SolverKind;
use mec_offload::trace::TraceRow;
use mec_offload::ScenarioConfig;

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct DemoOptions {
    pub imds: usize,
    pub sbs: usize,
    pub tasks: usize,
    pub pmax_dbm: f64,
    pub seed: u64,
    pub population: usize,
    pub ga_iters: usize,
    pub pso_iters: usize,
    pub solver: SolverKind,
    pub lambda: f64,
    /// Device counts for the density sweep.
    pub densities: Vec<usize>,
}

impl Default for DemoOptions {
    fn default() -> Self {
        DemoOptions {
            imds: 12,
            sbs: 8,
            tasks: 3,
            pmax_dbm: 23.0,
            seed: 1,
            population: 24,
            ga_iters: 60,
            pso_iters: 60,
            solver: SolverKind::Has,
            lambda: 1.0,
            densities: vec![2, 6, 10, 14],
        }
    }
}

impl DemoOptions {
    fn parse(json: &str) -> Result<Self, String> {
        if json.trim().is_empty() {
            return Ok(Self::default());
        }
        serde_json::from_str(json).map_err(|e| format!("bad options: {e}"))
    }

    fn spec(&self, solvers: Vec<SolverKind>, densities: Vec<usize>) -> SweepSpec {
        SweepSpec {
            rho_ue: densities,
            rho_sbs: vec![self.sbs],
            pmax_dbm: vec![self.pmax_dbm],
            solvers,
            cm_lambdas: vec![self.lambda],
            seeds: vec![self.seed],
            base: ScenarioConfig { num_tasks: self.tasks, ..ScenarioConfig::default() },
            ga: GaConfig { population_size: self.population, iterations: self.ga_iters, ..GaConfig::default() },
            pso: PsoConfig { iterations: self.pso_iters, ..PsoConfig::default() },
            trace: true,
            ..SweepSpec::default()
        }
    }

    fn cell(&self) -> Cell {
        Cell { rho_ue: self.imds, rho_sbs: self.sbs, pmax_dbm: self.pmax_dbm, seed: self.seed }
    }
}

#[derive(Serialize)]
struct Layout {
    radius_km: f64,
    imds: Vec<[f64; 2]>,
    base_stations: Vec<[f64; 2]>,
    deadline_s: Vec<f64>,
}

#[derive(Serialize)]
struct Solved {
    solver: SolverKind,
    assoc: Vec<usize>,
    power_w: Vec<f64>,
    lambda: f64,
    imd_time_s: Vec<f64>,
    deadline_s: Vec<f64>,
    total_energy_j: f64,
    bs_energy_j: f64,
    support_ratio: f64,
    penalty: f64,
    trace: Vec<TraceRow>,
}

#[derive(Serialize)]
struct CurvePoint {
    solver: SolverKind,
    imds: usize,
    total_energy_j: f64,
    support_ratio: f64,
}

/// Device and base-station positions of the instance the other calls solve.
pub fn layout_json(options: &str) -> Result<String, String> {
    let opts = DemoOptions::parse(options)?;
    let spec = opts.spec(vec![opts.solver], vec![opts.imds]);
    let scn = generate_scenario(&spec.cell_config(&opts.cell())).map_err(|e| e.to_string())?;
    let out = Layout {
        radius_km: scn.config.cell_radius_km,
        imds: scn.imd_positions.clone(),
        base_stations: scn.bs_positions.clone(),
        deadline_s: scn.deadline_s.clone(),
    };
    Ok(serde_json::to_string(&out).expect("layout serializes"))
}

/// Solves one instance with the chosen solver.
pub fn solve_json(options: &str) -> Result<String, String> {
    let opts = DemoOptions::parse(options)?;
    let spec = opts.spec(vec![opts.solver], vec![opts.imds]);
    let out = mec_offload::experiment::run_cell(&spec, &opts.cell()).map_err(|e| e.to_string())?;
    let res = &out.results[0];
    let ev = &res.evaluation;
    let scn = generate_scenario(&spec.cell_config(&opts.cell())).map_err(|e| e.to_string())?;
    let solved = Solved {
        solver: res.solver,
        assoc: res.solution.assoc.clone(),
        power_w: res.solution.power.clone(),
        lambda: res.solution.lambda,
        imd_time_s: ev.imd_time.clone(),
        deadline_s: scn.deadline_s,
        total_energy_j: ev.total_energy,
        bs_energy_j: ev.bs_energy,
        support_ratio: ev.support_ratio(),
        penalty: ev.penalty,
        trace: res.trace.rows.clone(),
    };
    Ok(serde_json::to_string(&solved).expect("result serializes"))
}

/// Energy and support of HAS, CMT and CM as the device count grows.
pub fn density_curve_json(options: &str) -> Result<String, String> {
    let opts = DemoOptions::parse(options)?;
    let mut spec = opts.spec(vec![SolverKind::Has, SolverKind::Cmt, SolverKind::Cm], opts.densities.clone());
    spec.trace = false;
    let outputs = run_cells(&spec).map_err(|e| e.to_string())?;
    let points: Vec<CurvePoint> = outputs
        .iter()
        .flat_map(|o| {
            o.results.iter().map(|r| CurvePoint {
                solver: r.solver,
                imds: o.cell.rho_ue,
                total_energy_j: r.evaluation.total_energy,
                support_ratio: r.evaluation.support_ratio(),
            })
        })
        .collect();
    Ok(serde_json::to_string(&points).expect("curve serializes"))
}

#[wasm_bindgen]
pub fn layout(options: &str) -> Result<String, JsError> {
    layout_json(options).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn solve(options: &str) -> Result<String, JsError> {
    solve_json(options).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn density_curve(options: &str) -> Result<String, JsError> {
    density_curve_json(options).map_err(|e| JsError::new(&e))
}

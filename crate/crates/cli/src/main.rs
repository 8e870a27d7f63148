use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mec_offload::experiment::{run_cell, run_sweep, summarize, summary_to_csv, Cell, SweepSpec};
use mec_offload::ga::GaConfig;
use mec_offload::pso::PsoConfig;
use mec_offload::solvers::SolverKind;
use mec_offload::{Error, Result, ScenarioConfig};

#[derive(Parser)]
#[command(name = "mec-offload", version, about = "Energy-aware task offloading optimizer and sweep harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single instance and print its metrics.
    Run(RunArgs),
    /// Run a parameter sweep described by a JSON spec.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// Output directory; overrides `out_dir` in the spec.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate a sweep CSV per group.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated group columns.
        #[arg(long, value_delimiter = ',', default_value = "solver,rho_ue")]
        by: Vec<String>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "has")]
    solver: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    imds: Option<usize>,
    #[arg(long)]
    sbs: Option<usize>,
    #[arg(long)]
    tasks: Option<usize>,
    #[arg(long)]
    pmax_dbm: Option<f64>,
    /// Band split for the CM baseline.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long)]
    ga_iters: Option<usize>,
    #[arg(long)]
    pso_iters: Option<usize>,
    #[arg(long)]
    pop: Option<usize>,
    /// Scenario config JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the full result (solution, evaluation, trace) as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run(args: RunArgs) -> Result<()> {
    let solver: SolverKind = args.solver.parse()?;
    let mut base = match &args.config {
        Some(p) => ScenarioConfig::from_json(&read(p)?)?,
        None => ScenarioConfig::default(),
    };
    if let Some(k) = args.tasks {
        base.num_tasks = k;
    }
    let cell = Cell {
        rho_ue: args.imds.unwrap_or(base.num_imds),
        rho_sbs: args.sbs.unwrap_or(base.num_sbs),
        pmax_dbm: args.pmax_dbm.unwrap_or_else(|| mec_offload::scenario::watts_to_dbm(base.p_max_w)),
        seed: args.seed,
    };
    let mut ga = GaConfig::default();
    let mut pso = PsoConfig::default();
    if let Some(z) = args.pop {
        ga.population_size = z;
    }
    if let Some(t) = args.ga_iters {
        ga.iterations = t;
    }
    if let Some(t) = args.pso_iters {
        pso.iterations = t;
    }
    let spec = SweepSpec {
        rho_ue: vec![cell.rho_ue],
        rho_sbs: vec![cell.rho_sbs],
        pmax_dbm: vec![cell.pmax_dbm],
        solvers: vec![solver],
        cm_lambdas: vec![args.lambda],
        seeds: vec![cell.seed],
        base,
        ga,
        pso,
        trace: args.out.is_some(),
        ..SweepSpec::default()
    };
    spec.validate()?;
    let out = run_cell(&spec, &cell)?;
    let res = &out.results[0];
    let ev = &res.evaluation;
    println!(
        "solver={} seed={} imds={} sbs={} pmax_dbm={} total_energy_j={:.6e} bs_energy_j={:.6e} support_ratio={:.4} penalty={:.6e} runtime_s={:.3}",
        res.solver,
        cell.seed,
        cell.rho_ue,
        cell.rho_sbs,
        cell.pmax_dbm,
        ev.total_energy,
        ev.bs_energy,
        ev.support_ratio(),
        ev.penalty,
        res.runtime_s
    );
    if let Some(path) = &args.out {
        write(path, &(serde_json::to_string_pretty(res).expect("result serializes") + "\n"))?;
    }
    Ok(())
}

fn sweep(spec_path: &Path, out: Option<PathBuf>) -> Result<()> {
    let spec = SweepSpec::from_json(&read(spec_path)?)?;
    let dir = out
        .or_else(|| spec.out_dir.clone())
        .ok_or_else(|| Error::config("out_dir", "pass --out or set out_dir in the spec"))?;
    let report = run_sweep(&spec, &dir)?;
    println!(
        "wrote {} rows and {} trace files to {}",
        report.rows.len(),
        report.trace_files.len(),
        report.out_dir.display()
    );
    Ok(())
}

fn summarize_cmd(input: &Path, by: &[String], out: Option<PathBuf>) -> Result<()> {
    let rows = summarize(&read(input)?, by)?;
    let text = summary_to_csv(by, &rows);
    match out {
        Some(p) => write(&p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Sweep { spec, out } => sweep(&spec, out),
        Command::Summarize { input, by, out } => summarize_cmd(&input, &by, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io { .. } => 3,
                e if e.is_config() => 2,
                _ => 1,
            })
        }
    }
}

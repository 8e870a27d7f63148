//! Acceptance suite. Every criterion prints one `PASS` / `FAIL` line on the
//! real stdout (not the captured one) and then asserts.

use std::f64::consts::LN_2;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use mec_offload::encoding::{decode, init_genes, GeneDomain};
use mec_offload::experiment::{run_cells, run_sweep, SweepSpec};
use mec_offload::ga::{run_ga, GaConfig};
use mec_offload::objective::Problem;
use mec_offload::pso::{run_pso, PsoConfig};
use mec_offload::scenario::{generate_scenario, Scenario, ScenarioConfig};
use mec_offload::seeding::rng_from_seed;
use mec_offload::solvers::{run_has_with, run_hgp_with, solve_cmt, SolverKind};
use mec_offload::sysmodel::{evaluate, EvalConfig, Evaluation, Solution};

fn report(id: &str, pass: bool, detail: &str) {
    let line = format!("{id} {}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "{id} failed: {detail}");
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Straight transcription of the model with explicit association
/// indicators and full sums over every base station.
struct Oracle {
    time: Vec<f64>,
    energy: Vec<f64>,
    penalty: f64,
    fitness: f64,
}

fn div(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn oracle(scn: &Scenario, sol: &Solution, alpha: &[f64]) -> Oracle {
    let c = &scn.config;
    let (u, s, k) = (scn.num_imds(), scn.num_sbs(), scn.num_tasks());
    let lam = sol.lambda;
    let x = |i: usize, j: usize| if sol.assoc[i] == j { 1.0 } else { 0.0 };
    let dbar = |i: usize, j: usize, t: usize| x(i, j) * sol.first_hop[i][t];
    let dhat = |i: usize, j: usize, t: usize| if j == 0 { 0.0 } else { x(i, j) * sol.second_hop[i][t] };
    let d = |i: usize, t: usize| scn.task_bits[i][t];
    let cyc = |i: usize, t: usize| scn.cycles_per_bit[i][t];
    let n = |j: usize| (0..u).map(|m| x(m, j)).sum::<f64>();
    let se = |i: usize, j: usize| (sol.power[i] * scn.gain[i][j] / c.noise_power_w).ln_1p() / LN_2;
    let rate = |i: usize, j: usize| {
        if j == 0 {
            lam * c.bandwidth_hz / n(0) * se(i, 0)
        } else {
            (1.0 - lam).max(c.theta) * c.bandwidth_hz / (s as f64 * n(j)) * se(i, j)
        }
    };
    let a1: f64 =
        (0..u).map(|m| (1..=s).map(|j| x(m, j) * (0..k).map(|l| dhat(m, j, l) * cyc(m, l)).sum::<f64>()).sum::<f64>()).sum();
    let a2: f64 = (0..u).map(|m| x(m, 0) * (0..k).map(|l| dbar(m, 0, l) * cyc(m, l)).sum::<f64>()).sum();

    let mut time = vec![0.0; u];
    let mut energy = vec![0.0; u];
    for i in 0..u {
        let local_den: f64 =
            (0..=s).map(|j| (0..k).map(|l| x(i, j) * (d(i, l) - dbar(i, j, l)) * cyc(i, l)).sum::<f64>()).sum();
        for t in 0..k {
            let local_num: f64 = (0..=s).map(|j| x(i, j) * (d(i, t) - dbar(i, j, t)) * cyc(i, t)).sum();
            let f = div(local_num, local_den) * c.imd_cpu_hz;
            let mut t_loc = 0.0;
            let mut e_loc = 0.0;
            for j in 0..=s {
                let work = (d(i, t) - dbar(i, j, t)) * cyc(i, t);
                t_loc += x(i, j) * div(work, f);
                e_loc += x(i, j) * c.kappa_chip * work * f * f;
            }
            let mbs_num: f64 =
                (1..=s).map(|j| x(i, j) * dhat(i, j, t) * cyc(i, t)).sum::<f64>() + x(i, 0) * dbar(i, 0, t) * cyc(i, t);
            let f_mbs = div(mbs_num, a1 + a2) * c.mbs_cpu_hz;
            let mut t_off = 0.0;
            let mut e_off = 0.0;
            for j in 1..=s {
                if x(i, j) == 0.0 {
                    continue;
                }
                let sbs_den: f64 = (0..u)
                    .map(|m| x(m, j) * (0..k).map(|l| (dbar(m, j, l) - dhat(m, j, l)) * cyc(m, l)).sum::<f64>())
                    .sum();
                let kept = (dbar(i, j, t) - dhat(i, j, t)) * cyc(i, t);
                let f_sbs = div(kept, sbs_den) * c.sbs_cpu_hz;
                let r = rate(i, j);
                t_off += dbar(i, j, t) / r + div(kept, f_sbs) + dhat(i, j, t) / c.backhaul_rate_bps
                    + div(dhat(i, j, t) * cyc(i, t), f_mbs);
                e_off += sol.power[i] * dbar(i, j, t) / r
                    + kept * c.cycle_energy_sbs_j
                    + c.wired_power_w * dhat(i, j, t) / c.backhaul_rate_bps
                    + dhat(i, j, t) * cyc(i, t) * c.cycle_energy_mbs_j;
            }
            if x(i, 0) == 1.0 {
                let r = rate(i, 0);
                t_off += dbar(i, 0, t) / r + div(dbar(i, 0, t) * cyc(i, t), f_mbs);
                e_off += sol.power[i] * dbar(i, 0, t) / r + dbar(i, 0, t) * cyc(i, t) * c.cycle_energy_mbs_j;
            }
            time[i] += t_loc.max(t_off);
            energy[i] += e_loc + e_off;
        }
    }
    let penalty: f64 = (0..u).map(|i| alpha[i] * (time[i] - scn.deadline_s[i]).max(0.0)).sum();
    let fitness = -energy.iter().sum::<f64>() - penalty;
    Oracle { time, energy, penalty, fitness }
}

fn tiny(seed: u64, u: usize, s: usize, k: usize) -> Scenario {
    generate_scenario(&ScenarioConfig { num_imds: u, num_sbs: s, num_tasks: k, seed, ..Default::default() }).unwrap()
}

#[test]
fn a1_oracle_equivalence() {
    let mut worst = 0.0f64;
    let mut assoc_patterns = std::collections::HashSet::new();
    for seed in 0..50u64 {
        let scn = tiny(1000 + seed, 2, 2, 2);
        let ev = EvalConfig::for_scenario(&scn);
        let dom = GeneDomain::new(&scn);
        let mut rng = rng_from_seed(seed);
        let mut genes = init_genes(&dom, &mut rng);
        // Cycle through all nine association patterns across the instances.
        genes.block_mut(mec_offload::encoding::Block::Assoc).copy_from_slice(&[(seed % 3) as f64, (seed / 3 % 3) as f64]);
        let sol = decode(&genes);
        assoc_patterns.insert(sol.assoc.clone());
        let got = evaluate(&scn, &sol, &ev).unwrap();
        let want = oracle(&scn, &sol, &ev.penalty_factors);
        for i in 0..2 {
            worst = worst.max(rel_err(got.imd_time[i], want.time[i]));
            worst = worst.max(rel_err(got.imd_energy[i], want.energy[i]));
        }
        worst = worst.max(rel_err(got.fitness, want.fitness));
    }
    report(
        "A1",
        worst <= 1e-9 && assoc_patterns.len() == 9,
        &format!("50 instances, {} association patterns, max relative error {worst:.3e} (tol 1e-9)", assoc_patterns.len()),
    );
}

#[test]
fn a2_cmt_closed_form() {
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let (u, s, k) = (1 + seed as usize % 6, 1 + seed as usize % 4, 1 + seed as usize % 4);
        let scn = tiny(5000 + seed, u, s, k);
        let res = solve_cmt(&scn, &EvalConfig::for_scenario(&scn)).unwrap();
        let f = scn.config.imd_cpu_hz;
        for i in 0..u {
            let cycles: Vec<f64> = (0..k).map(|t| scn.task_bits[i][t] * scn.cycles_per_bit[i][t]).collect();
            let total: f64 = cycles.iter().sum();
            let t_closed = k as f64 * total / f;
            let e_closed: f64 = cycles.iter().map(|cy| scn.config.kappa_chip * cy * (cy / total * f).powi(2)).sum();
            worst = worst.max(rel_err(res.evaluation.imd_time[i], t_closed));
            worst = worst.max(rel_err(res.evaluation.imd_energy[i], e_closed));
        }
    }
    report("A2", worst <= 1e-12, &format!("100 instances, max relative error {worst:.3e} (tol 1e-12)"));
}

#[test]
fn a3_monotone_convergence() {
    let mut runs = 0;
    let mut violations = 0;
    for seed in 0..6u64 {
        let scn = tiny(200 + seed, 8, 6, 2);
        let ev = EvalConfig::for_scenario(&scn);
        let problem = Problem::new(&scn, &ev);
        let traditional = seed % 2 == 1;
        let ga = GaConfig { population_size: 16, iterations: 60, traditional_mode: traditional, ..Default::default() };
        let pso = PsoConfig { iterations: 60, traditional_mode: traditional, ..Default::default() };
        let mut rng = rng_from_seed(seed);
        let (pop, ga_trace) = run_ga(&problem, &ga, &mut rng).unwrap();
        let (_, pso_trace) = run_pso(&problem, &pso, pop.individuals.clone(), &mut rng).unwrap();
        for trace in [&ga_trace, &pso_trace] {
            runs += 1;
            violations += trace.rows.windows(2).filter(|w| w[1].best_fitness < w[0].best_fitness).count();
        }
        let has = run_has_with(&problem, &ga, &pso, seed).unwrap();
        runs += 1;
        violations += usize::from(!has.trace.is_monotone());
    }
    report("A3", violations == 0, &format!("{runs} traces, {violations} decreasing steps (tol 0)"));
}

#[test]
fn a4_feasibility_and_penalty() {
    let evaluated = AtomicUsize::new(0);
    let failures = AtomicUsize::new(0);
    let first = Mutex::new(None::<String>);
    let mut scn_holder = Vec::new();
    for seed in 0..3u64 {
        scn_holder.push(tiny(300 + seed, 6, 4, 2));
    }
    for (seed, scn) in scn_holder.iter().enumerate() {
        let ev = EvalConfig::for_scenario(scn);
        let theta = scn.theta();
        let audit = |sol: &Solution, e: &Evaluation| {
            evaluated.fetch_add(1, Ordering::Relaxed);
            let mut bad = Vec::new();
            for i in 0..scn.num_imds() {
                if sol.assoc[i] > scn.num_sbs() {
                    bad.push(format!("assoc[{i}]"));
                }
                if !(sol.power[i] >= theta && sol.power[i] <= scn.config.p_max_w) {
                    bad.push(format!("power[{i}]"));
                }
                for t in 0..scn.num_tasks() {
                    let (g, h, d) = (sol.first_hop[i][t], sol.second_hop[i][t], scn.task_bits[i][t]);
                    if !(g >= theta && g <= d) {
                        bad.push(format!("first_hop[{i}][{t}]"));
                    }
                    if sol.assoc[i] > 0 && !(h >= theta && h <= g) {
                        bad.push(format!("second_hop[{i}][{t}]"));
                    }
                }
            }
            if !(sol.lambda >= theta && sol.lambda <= 1.0) {
                bad.push("lambda".into());
            }
            let want = oracle(scn, sol, &ev.penalty_factors).penalty;
            let err = if want == 0.0 { e.penalty.abs() } else { rel_err(e.penalty, want) };
            if err > 1e-12 {
                bad.push(format!("penalty {} vs {want}", e.penalty));
            }
            if !bad.is_empty() {
                failures.fetch_add(1, Ordering::Relaxed);
                first.lock().unwrap().get_or_insert_with(|| bad.join(", "));
            }
        };
        let problem = Problem::new(scn, &ev).with_audit(&audit);
        let ga = GaConfig { population_size: 16, iterations: 40, ..Default::default() };
        let pso = PsoConfig { iterations: 40, ..Default::default() };
        run_has_with(&problem, &ga, &pso, seed as u64).unwrap();
        run_hgp_with(&problem, &ga, &pso, seed as u64).unwrap();
    }
    let n = evaluated.load(Ordering::Relaxed);
    let f = failures.load(Ordering::Relaxed);
    let detail = match first.lock().unwrap().clone() {
        Some(msg) => format!("{n} evaluations, {f} violations, first: {msg}"),
        None => format!("{n} evaluations audited, 0 violations (penalty tol 1e-12)"),
    };
    report("A4", f == 0 && n > 0, &detail);
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// At most one decreasing step, and that one by no more than `tol` relative.
fn nearly_non_decreasing(xs: &[f64], tol: f64) -> bool {
    let drops: Vec<f64> = xs.windows(2).filter(|w| w[1] < w[0]).map(|w| (w[0] - w[1]) / w[0].abs()).collect();
    drops.len() <= 1 && drops.iter().all(|d| *d <= tol)
}

#[test]
fn a5_trends_over_density() {
    let densities = [5usize, 15, 25, 35];
    let spec = SweepSpec {
        rho_ue: densities.to_vec(),
        rho_sbs: vec![35],
        pmax_dbm: vec![23.0],
        solvers: vec![SolverKind::Has, SolverKind::Cmt, SolverKind::Cm],
        cm_lambdas: vec![0.25, 0.75],
        seeds: (1..=5).collect(),
        trace: false,
        ..Default::default()
    };
    let outputs = run_cells(&spec).unwrap();
    let pick = |rho: usize, solver: SolverKind, lambda: Option<f64>| -> Vec<(f64, f64, f64)> {
        outputs
            .iter()
            .filter(|o| o.cell.rho_ue == rho)
            .flat_map(|o| o.results.iter())
            .filter(|r| r.solver == solver && r.lambda == lambda)
            .map(|r| (r.evaluation.total_energy, r.evaluation.bs_energy, r.evaluation.support_ratio()))
            .collect()
    };
    let has: Vec<Vec<(f64, f64, f64)>> = densities.iter().map(|&r| pick(r, SolverKind::Has, None)).collect();
    let energy: Vec<f64> = has.iter().map(|v| median(v.iter().map(|x| x.0).collect())).collect();
    let bs: Vec<f64> = has.iter().map(|v| median(v.iter().map(|x| x.1).collect())).collect();
    let support: Vec<f64> = has.iter().map(|v| median(v.iter().map(|x| x.2).collect())).collect();
    let cmt: Vec<f64> =
        densities.iter().flat_map(|&r| pick(r, SolverKind::Cmt, None)).map(|x| x.2).collect();

    let energy_ok = nearly_non_decreasing(&energy, 0.02);
    let bs_ok = nearly_non_decreasing(&bs, 0.02);
    let support_ok = support.windows(2).all(|w| w[1] <= w[0]);
    let cmt_ok = cmt.iter().all(|s| *s == cmt[0]);
    let mut cm_ok = true;
    for o in &outputs {
        let cm = |l: f64| o.results.iter().find(|r| r.solver == SolverKind::Cm && r.lambda == Some(l)).unwrap();
        cm_ok &= cm(0.25).evaluation.total_energy >= cm(0.75).evaluation.total_energy;
    }
    let fmt = |xs: &[f64]| xs.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    report(
        "A5",
        energy_ok && bs_ok && support_ok && cmt_ok && cm_ok,
        &format!(
            "rho_ue {densities:?}: HAS median energy [{}] {}, bs energy [{}] {}, support [{}] {}; CMT support constant {} ({}); CM(0.25) >= CM(0.75) in every cell {}",
            fmt(&energy),
            energy_ok,
            fmt(&bs),
            bs_ok,
            fmt(&support),
            support_ok,
            cmt_ok,
            cmt[0],
            cm_ok
        ),
    );
}

#[test]
fn a6_has_vs_hgp() {
    let spec = SweepSpec {
        rho_ue: vec![35],
        rho_sbs: vec![35],
        pmax_dbm: vec![23.0],
        solvers: vec![SolverKind::Has, SolverKind::Hgp],
        seeds: (1..=10).collect(),
        trace: false,
        ..Default::default()
    };
    let outputs = run_cells(&spec).unwrap();
    let mut has_e = Vec::new();
    let mut hgp_e = Vec::new();
    let mut wins = 0;
    for o in &outputs {
        let has = o.results.iter().find(|r| r.solver == SolverKind::Has).unwrap();
        let hgp = o.results.iter().find(|r| r.solver == SolverKind::Hgp).unwrap();
        has_e.push(has.evaluation.total_energy);
        hgp_e.push(hgp.evaluation.total_energy);
        wins += usize::from(has.evaluation.fitness >= hgp.evaluation.fitness);
    }
    let (mh, mg) = (median(has_e), median(hgp_e));
    let n = outputs.len();
    report(
        "A6",
        mh <= 1.05 * mg && 2 * wins >= n,
        &format!("{n} seeds: median energy HAS {mh:.4} J vs HGP {mg:.4} J (ratio {:.4}, tol 1.05); HAS fitness >= HGP on {wins}/{n}", mh / mg),
    );
}

/// Exhaustive grid over both associations and 20 points per continuous
/// variable; returns the best penalized objective `-fitness`.
fn grid_optimum(scn: &Scenario, ev: &EvalConfig) -> f64 {
    let theta = scn.theta();
    let pts = |hi: f64| (0..20).map(move |i| theta + (hi - theta) * i as f64 / 19.0);
    let d = scn.task_bits[0][0];
    let mut best = f64::INFINITY;
    for assoc in 0..=1usize {
        for p in pts(scn.config.p_max_w) {
            for g in pts(d) {
                let hops: Vec<f64> = if assoc == 0 { vec![theta] } else { pts(g).collect() };
                for &h in &hops {
                    for lambda in pts(1.0) {
                        let sol = Solution {
                            assoc: vec![assoc],
                            power: vec![p],
                            first_hop: vec![vec![g]],
                            second_hop: vec![vec![h]],
                            lambda,
                        };
                        best = best.min(-evaluate(scn, &sol, ev).unwrap().fitness);
                    }
                }
            }
        }
    }
    best
}

#[test]
fn a7_tiny_instance_optimality() {
    let mut worst = f64::NEG_INFINITY;
    let mut lines = Vec::new();
    for seed in 0..5u64 {
        let scn = tiny(700 + seed, 1, 1, 1);
        let ev = EvalConfig::for_scenario(&scn);
        let grid = grid_optimum(&scn, &ev);
        let problem = Problem::new(&scn, &ev);
        let has = run_has_with(&problem, &GaConfig::default(), &PsoConfig::default(), seed).unwrap();
        let got = -has.evaluation.fitness;
        let gap = (got - grid) / grid;
        worst = worst.max(gap);
        lines.push(format!("{got:.5}/{grid:.5}"));
    }
    report(
        "A7",
        worst <= 0.02,
        &format!("HAS/grid objective on 5 instances [{}], worst gap {:+.3}% (tol 2%)", lines.join(" "), 100.0 * worst),
    );
}

fn dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy();
            name == "sweep.csv" || name.starts_with("trace_")
        })
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn a8_determinism() {
    let spec = SweepSpec {
        rho_ue: vec![4, 8],
        rho_sbs: vec![5],
        pmax_dbm: vec![20.0, 23.0],
        solvers: SolverKind::ALL.to_vec(),
        cm_lambdas: vec![0.5, 1.0],
        seeds: vec![3, 4],
        base: ScenarioConfig { num_tasks: 2, ..Default::default() },
        ga: GaConfig { population_size: 12, iterations: 20, ..Default::default() },
        pso: PsoConfig { iterations: 20, ..Default::default() },
        trace: true,
        ..Default::default()
    };
    let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let pool = |n: usize| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    pool(4).install(|| run_sweep(&spec, dirs[0].path())).unwrap();
    pool(4).install(|| run_sweep(&spec, dirs[1].path())).unwrap();
    pool(1).install(|| run_sweep(&spec, dirs[2].path())).unwrap();
    let a = dir_files(dirs[0].path());
    let b = dir_files(dirs[1].path());
    let c = dir_files(dirs[2].path());
    let pass = a.len() > 1 && a == b && a == c;
    report(
        "A8",
        pass,
        &format!("{} files (sweep.csv + traces) byte-identical across two 4-thread runs and one 1-thread run: {pass}", a.len()),
    );
}

//! The five subcommands. Each writes its artifacts into the output directory
//! and prints a summary table; failed checks become
//! [`Failure::Verification`] after the artifacts are written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use acma::disks::{disk_laplacian_probe, hessian_form, make_disk, DiskOptions};
use acma::field::PointFn;
use acma::io::{disk_to_csv, export_field, import_field, write_json};
use acma::maximal::{default_cover, fj_harmonic_check, maximality_probe, solve_maximal, ProbeOptions};
use acma::operator::{a_matrix_fn, ma_residual, psh_classify, PshVerdict};
use acma::solver::{
    active_max_abs, comparison_check, estimate_report, max_error, solve_dirichlet, ComparisonVerdict, Diagnostics,
    MAProblem, Solution,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{Command, RunConfig};
use crate::Failure;

/// Name/value rows printed as the summary table.
#[derive(Default)]
struct Summary {
    rows: Vec<(String, String)>,
    failed: Vec<String>,
}

impl Summary {
    fn row(&mut self, name: &str, value: impl ToString) {
        self.rows.push((name.to_string(), value.to_string()));
    }

    fn check(&mut self, name: &str, ok: bool) {
        self.row(name, if ok { "pass" } else { "FAIL" });
        if !ok {
            self.failed.push(name.to_string());
        }
    }

    fn render(&self) -> String {
        let w = self.rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut s = String::new();
        for (k, v) in &self.rows {
            let _ = writeln!(s, "{k:<w$}  {v}");
        }
        s
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn solver_err(e: acma::Error) -> Failure {
    Failure::Solver(e.to_string())
}

fn json_to(value: &impl Serialize, path: &Path) -> Result<(), Failure> {
    write_json(value, path).map_err(|e| io_err(path, e))
}

const MANUFACTURED_STEP: f64 = 1e-3;

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let mut summary = Summary::default();
    summary.row("command", format!("{:?}", cfg.command).to_lowercase());
    match cfg.command {
        Command::Solve => solve(cfg, out, &mut summary)?,
        Command::Maximal => maximal(cfg, out, &mut summary)?,
        Command::Verify => verify(cfg, out, &mut summary)?,
        Command::Disks => disks(cfg, out, &mut summary)?,
        Command::Bench => bench(cfg, out, &mut summary)?,
    }
    let table = summary.render();
    let path = out.join("summary.txt");
    fs::write(&path, &table).map_err(|e| io_err(&path, e))?;
    print!("{table}");
    if summary.failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("failed checks: {}", summary.failed.join(", "))))
    }
}

/// `f = "manufactured"` takes `f = det A(exact)`, differenced with step
/// [`MANUFACTURED_STEP`].
fn problem(cfg: &RunConfig, h: f64) -> Result<MAProblem, Failure> {
    let dom = cfg.domain_at(h)?;
    let phi = cfg.phi()?;
    let p = if cfg.problem.f.trim() == "manufactured" {
        let exact = cfg.exact()?.ok_or_else(|| Failure::Config("f = \"manufactured\" needs problem.exact".into()))?;
        let frame = dom.frame().clone();
        let f = move |p: &[f64]| a_matrix_fn(&exact, &frame, p, MANUFACTURED_STEP).map_or(f64::NAN, |a| a.det());
        MAProblem::from_fns(dom, &f, phi)
    } else {
        MAProblem::from_fns(dom, &cfg.f()?, phi)
    };
    p.map_err(|e| Failure::Config(format!("problem: {e}")))
}

fn solve(cfg: &RunConfig, out: &Path, summary: &mut Summary) -> Result<(), Failure> {
    let solver = cfg.solver.build()?;
    let p = problem(cfg, cfg.domain.h)?;
    let dom = p.domain.clone();
    let mut sol = solve_dirichlet(&p, &solver).map_err(solver_err)?;
    let est = estimate_report(&sol, &p, solver.tol).map_err(solver_err)?;
    sol.diagnostics.estimate_report = Some(est.clone());
    let path = out.join("u.csv");
    export_field(&sol.u, &path).map_err(|e| io_err(&path, e))?;
    json_to(&sol.diagnostics, &out.join("diagnostics.json"))?;

    let d = &sol.diagnostics;
    summary.row("h", dom.h());
    summary.row("interior nodes", dom.interior().len());
    summary.row("newton iterations", d.iterations);
    summary.row("residual max", sci(d.residual_max));
    summary.row("psh margin", sci(d.psh_margin));
    if let Some(exact) = cfg.exact()? {
        summary.row("max error", sci(max_error(&dom, &sol.u, &exact)));
    }
    summary.check("converged", d.converged);
    summary.check("uniform bound", est.uniform_bound_holds);
    summary.check("barrier sandwich", est.barrier_holds);
    Ok(())
}

#[derive(Serialize)]
struct StepRecord {
    k: usize,
    difference: f64,
    lipschitz: f64,
    iterations: usize,
    residual_max: f64,
}

fn maximal(cfg: &RunConfig, out: &Path, summary: &mut Summary) -> Result<(), Failure> {
    let solver = cfg.solver.build()?;
    let dom = cfg.domain()?;
    let run = solve_maximal(dom.clone(), cfg.phi()?, &cfg.maximal.schedule, &solver).map_err(solver_err)?;
    for (k, it) in run.schedule.iter().zip(&run.iterates) {
        let path = out.join(format!("u_k{k}.csv"));
        export_field(&it.u, &path).map_err(|e| io_err(&path, e))?;
    }
    let path = out.join("extrapolated.csv");
    export_field(&run.extrapolated, &path).map_err(|e| io_err(&path, e))?;

    let limit = dom.mask(&run.extrapolated);
    let opts = ProbeOptions { trials: cfg.maximal.probe_trials, tol: solver.tol };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let probe = maximality_probe(&dom, &limit, &opts, &mut rng);
    let fj = fj_harmonic_check(&dom, &limit, &default_cover(&dom, cfg.maximal.cover), &opts, &mut rng);
    let steps: Vec<StepRecord> = run
        .steps
        .iter()
        .map(|s| StepRecord {
            k: s.k,
            difference: s.difference,
            lipschitz: s.lipschitz,
            iterations: s.diagnostics.iterations,
            residual_max: s.diagnostics.residual_max,
        })
        .collect();
    let record = json!({
        "schedule": run.schedule,
        "steps": steps,
        "lipschitz_estimate": run.lipschitz_estimate,
        "lipschitz_spread": run.lipschitz_spread(),
        "monotonicity_defect": run.monotonicity_defect,
        "tolerance": run.tolerance,
        "verdicts": { "maximality_probe": probe, "fj_harmonic": fj },
    });
    json_to(&record, &out.join("maximal.json"))?;

    summary.row("h", dom.h());
    for s in &run.steps {
        summary.row(&format!("k = {}", s.k), format!("diff {}  lipschitz {:.4}", sci(s.difference), s.lipschitz));
    }
    summary.row("monotonicity defect", sci(run.monotonicity_defect));
    if let Some(exact) = cfg.exact()? {
        summary.row("max error (extrapolated)", sci(max_error(&dom, &run.extrapolated, &exact)));
    }
    summary.check("monotone iterates", run.is_monotone());
    summary.check("maximality probe", probe.holds());
    summary.check("F(J)-harmonic check", fj.holds());
    Ok(())
}

fn verify(cfg: &RunConfig, out: &Path, summary: &mut Summary) -> Result<(), Failure> {
    let solver = cfg.solver.build()?;
    let p = problem(cfg, cfg.domain.h)?;
    let dom = p.domain.clone();
    let path = cfg.verify.solution.clone().unwrap_or_else(|| out.join("u.csv"));
    let u = import_field(&path, Some(dom.grid())).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;

    let delta = solver.delta_schedule.last().copied().unwrap_or(solver.delta);
    let f = p.f.map(|v| v.max(delta));
    let scale = dom.interior().iter().map(|&i| f.get(i)).fold(1.0f64, f64::max);
    let residual = ma_residual(&u, &f, dom.operator());
    let psh = psh_classify(&u, dom.operator(), None);
    // Band values must be the ones the ghost rule builds from phi.
    let rebuilt = dom.assemble_field(&dom.interior_values(&u), &dom.ghost_constants(p.phi.as_ref()));
    let boundary_gap = dom.band().iter().map(|b| (u.get(b.index) - rebuilt.get(b.index)).abs()).fold(0.0, f64::max);
    let boundary_tol = 1e-10 * active_max_abs(&dom, &u).max(1.0);
    let barriers = p.barriers().map_err(solver_err)?;
    let lower = comparison_check(&dom, &barriers.lower, &u, solver.tol);
    let sol = Solution { u, diagnostics: Diagnostics { delta, ..Diagnostics::default() } };
    let est = estimate_report(&sol, &p, solver.tol).map_err(solver_err)?;
    let record = json!({
        "solution": path,
        "residual": residual,
        "residual_tolerance": 10.0 * solver.tol * scale,
        "psh": psh,
        "boundary_gap": boundary_gap,
        "boundary_tolerance": boundary_tol,
        "lower_barrier_comparison": lower,
        "estimate_report": est,
    });
    json_to(&record, &out.join("verify.json"))?;

    summary.row("solution", path.display());
    summary.row("residual max", sci(residual.max));
    summary.row("psh margin", sci(psh.margin));
    summary.check("equation residual", residual.max <= 10.0 * solver.tol * scale);
    summary.row("boundary gap", sci(boundary_gap));
    summary.check("boundary values", boundary_gap <= boundary_tol);
    summary.check("plurisubharmonic", psh.verdict != PshVerdict::NotPsh);
    summary.check("lower barrier comparison", lower.verdict == ComparisonVerdict::Holds);
    summary.check("uniform bound", est.uniform_bound_holds);
    summary.check("barrier sandwich", est.barrier_holds);
    Ok(())
}

#[derive(Serialize)]
struct DiskRecord {
    file: String,
    center: Vec<f64>,
    direction: Vec<f64>,
    residual: f64,
    contraction: f64,
    iterations: usize,
    laplacian: f64,
    hessian_form: f64,
    tolerance: f64,
}

fn disks(cfg: &RunConfig, out: &Path, summary: &mut Summary) -> Result<(), Failure> {
    let spec = &cfg.disks;
    let j = cfg.structure()?;
    let dom = cfg.domain()?;
    let rho = dom.defining_function();
    let field = cfg.expr(&spec.field, "disks.field")?;
    let bbox = dom.grid().bounding_box();
    let opts = DiskOptions { radius: spec.radius, ..DiskOptions::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dir = out.join("disks");
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let mut records = Vec::new();
    let mut consistent = true;
    for k in 0..spec.count {
        // Centres well inside the domain so the disk images stay in it.
        let center = loop {
            let c: Vec<f64> = bbox.lo.iter().zip(&bbox.hi).map(|(a, b)| rng.random_range(*a..*b)).collect();
            if rho.value(&c) < -0.5 {
                break c;
            }
        };
        let v: Vec<f64> = (0..j.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
        let direction: Vec<f64> = v.iter().map(|x| x / norm).collect();
        let disk = make_disk(&j, &center, std::slice::from_ref(&direction), &opts).map_err(solver_err)?;
        let laplacian = disk_laplacian_probe(&field, &disk).map_err(solver_err)?;
        let form = hessian_form(&field, dom.frame(), &disk, spec.h).map_err(solver_err)?;
        let tolerance = 10.0 * (spec.h * spec.h + opts.tol) * laplacian.abs().max(1.0);
        consistent &= (laplacian - form).abs() <= tolerance && disk.residual <= opts.tol;
        let file = format!("disk_{k}.csv");
        let path = dir.join(&file);
        fs::write(&path, disk_to_csv(&disk, 8, 32)).map_err(|e| io_err(&path, e))?;
        records.push(DiskRecord {
            file,
            center,
            direction,
            residual: disk.residual,
            contraction: disk.contraction,
            iterations: disk.iterations,
            laplacian,
            hessian_form: form,
            tolerance,
        });
    }
    json_to(&records, &out.join("disks.json"))?;
    let max_res = records.iter().map(|r| r.residual).fold(0.0, f64::max);
    let max_gap = records.iter().map(|r| (r.laplacian - r.hessian_form).abs() / r.tolerance).fold(0.0, f64::max);
    summary.row("disks", records.len());
    summary.row("max residual", sci(max_res));
    summary.row("max |4A - Delta| / tol", format!("{max_gap:.4}"));
    summary.check("disk consistency", consistent);
    Ok(())
}

#[derive(Serialize)]
struct BenchRow {
    h: f64,
    interior_nodes: usize,
    iterations: usize,
    error: f64,
    order: Option<f64>,
    seconds: f64,
}

fn bench(cfg: &RunConfig, out: &Path, summary: &mut Summary) -> Result<(), Failure> {
    let solver = cfg.solver.build()?;
    let exact = cfg.exact()?.ok_or_else(|| Failure::Config("bench needs problem.exact".into()))?;
    let mut rows: Vec<BenchRow> = Vec::new();
    let mut converged = true;
    for &h in &cfg.bench.h {
        let start = Instant::now();
        let p = problem(cfg, h)?;
        let sol = solve_dirichlet(&p, &solver).map_err(solver_err)?;
        let error = max_error(&p.domain, &sol.u, &exact);
        converged &= sol.diagnostics.converged;
        let order = rows.last().map(|prev: &BenchRow| (prev.error / error).ln() / (prev.h / h).ln());
        rows.push(BenchRow {
            h,
            interior_nodes: p.domain.interior().len(),
            iterations: sol.diagnostics.iterations,
            error,
            order,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let mut csv = String::from("h,interior_nodes,iterations,error,order,seconds\n");
    for r in &rows {
        let order = r.order.map_or(String::new(), |o| o.to_string());
        let _ = writeln!(csv, "{},{},{},{},{},{}", r.h, r.interior_nodes, r.iterations, r.error, order, r.seconds);
    }
    let path = out.join("bench.csv");
    fs::write(&path, csv).map_err(|e| io_err(&path, e))?;
    json_to(&rows, &out.join("bench.json"))?;

    summary.row("h / nodes / its / error / order / s", "");
    for r in &rows {
        let order = r.order.map_or("-".to_string(), |o| format!("{o:.2}"));
        summary.row(
            &format!("{}", r.h),
            format!("{:>8} {:>3} {} {:>6} {:.1}", r.interior_nodes, r.iterations, sci(r.error), order, r.seconds),
        );
    }
    summary.check("all converged", converged);
    Ok(())
}

/// Output directory: the flag, then the config, then `./out`.
pub fn output_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    flag.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

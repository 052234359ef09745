//! Dirichlet problem `det A(u) = f` in the domain, `u = phi` on its boundary,
//! by damped inexact Newton on `log det A(u) = log f` inside the strictly psh
//! cone; comparison and a priori estimate checks on the results.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::domain::{build_barriers, m_rho, BarrierPair, GridDomain};
use crate::error::{Error, Result};
use crate::field::{PointFn, ScalarField, SharedFn};
use crate::linalg::{bicgstab, HermitianMatrix};
use crate::operator::{trace_weights, Terms};
use crate::par;

/// Problem data: domain, right-hand side `f >= 0` and boundary data `phi`.
#[derive(Clone)]
pub struct MAProblem {
    pub domain: Arc<GridDomain>,
    pub f: ScalarField,
    pub phi: SharedFn,
}

impl std::fmt::Debug for MAProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MAProblem").field("domain", &self.domain).finish()
    }
}

impl MAProblem {
    pub fn new(domain: Arc<GridDomain>, f: ScalarField, phi: SharedFn) -> Result<Self> {
        if !f.grid().same_as(domain.grid()) {
            return Err(Error::GridMismatch("right-hand side is on a different grid".into()));
        }
        for &i in domain.interior() {
            let v = f.get(i);
            if !(v >= -1e-12) {
                return Err(Error::InvalidInput(format!(
                    "right-hand side {v} at {:?} is negative or undefined",
                    domain.grid().point(i)
                )));
            }
        }
        for b in domain.band() {
            if !phi.value(&b.foot).is_finite() {
                return Err(Error::InvalidInput(format!("boundary data undefined at {:?}", b.foot)));
            }
        }
        Ok(Self { domain, f, phi })
    }

    /// Problem with closed-form `f` (sampled at interior nodes, `NaN`
    /// elsewhere) and `phi`.
    pub fn from_fns(domain: Arc<GridDomain>, f: &dyn PointFn, phi: SharedFn) -> Result<Self> {
        let grid = domain.grid().clone();
        let nodes = domain.interior();
        let inner = par::map_range(nodes.len(), |k| f.value(&grid.point(nodes[k])));
        let mut values = vec![f64::NAN; grid.len()];
        for (&i, v) in nodes.iter().zip(inner) {
            values[i] = v;
        }
        Self::new(domain, ScalarField::new(grid, values)?, phi)
    }

    /// `phi` sampled on every node.
    pub fn phi_field(&self) -> ScalarField {
        ScalarField::from_fn(self.domain.grid().clone(), self.phi.as_ref())
    }

    pub fn barriers(&self) -> Result<BarrierPair> {
        build_barriers(&self.domain, &self.phi_field(), &self.f)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverConfig {
    /// Residual tolerance relative to `max(1, max f)`; also the step tolerance.
    pub tol: f64,
    pub max_newton: usize,
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Trial steps must keep `lambda_min(A) >= fraction * current lambda_min`.
    pub margin_floor_fraction: f64,
    /// Solve with `max(f, delta)`; the last entry of `delta_schedule` wins
    /// when the schedule is nonempty.
    pub delta: f64,
    pub delta_schedule: Vec<f64>,
    /// Linear solves stop at this fraction of the current residual.
    pub forcing: f64,
    pub max_linear_iterations: usize,
    /// Optional caps on the initial trial step of each Newton iteration.
    pub damping_caps: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_newton: 60,
            backtrack: 0.5,
            max_backtracks: 30,
            margin_floor_fraction: 0.1,
            delta: 0.0,
            delta_schedule: Vec::new(),
            forcing: 1e-2,
            max_linear_iterations: 2000,
            damping_caps: Vec::new(),
        }
    }
}

/// Per-run record.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Diagnostics {
    pub converged: bool,
    pub iterations: usize,
    pub delta: f64,
    pub residual_history: Vec<f64>,
    pub log_residual_history: Vec<f64>,
    pub margin_history: Vec<f64>,
    pub damping_history: Vec<f64>,
    pub step_history: Vec<f64>,
    pub linear_iterations: Vec<usize>,
    pub residual_max: f64,
    pub psh_margin: f64,
    pub estimate_report: Option<EstimateReport>,
}

#[derive(Clone, Debug)]
pub struct Solution {
    /// Solution on interior and band nodes, `NaN` elsewhere.
    pub u: ScalarField,
    pub diagnostics: Diagnostics,
}

/// Solve from the lower barrier.
pub fn solve_dirichlet(problem: &MAProblem, config: &SolverConfig) -> Result<Solution> {
    solve_dirichlet_from(problem, config, None)
}

/// Solve from `initial` (interior values are used) or the lower barrier.
pub fn solve_dirichlet_from(
    problem: &MAProblem,
    config: &SolverConfig,
    initial: Option<&ScalarField>,
) -> Result<Solution> {
    let dom = &problem.domain;
    let start = match initial {
        Some(u) => dom.interior_values(u),
        None => dom.interior_values(&problem.barriers()?.lower),
    };
    let deltas: Vec<f64> =
        if config.delta_schedule.is_empty() { vec![config.delta] } else { config.delta_schedule.clone() };
    let fmin = dom.interior().iter().map(|&i| problem.f.get(i)).fold(f64::INFINITY, f64::min);
    if fmin <= 0.0 && deltas.iter().any(|&d| d <= 0.0) {
        return Err(Error::InvalidInput(
            "right-hand side vanishes somewhere; set a positive regularization delta".into(),
        ));
    }
    let consts = dom.ghost_constants(problem.phi.as_ref());
    let mut u = start;
    let mut diag = Diagnostics::default();
    for &delta in &deltas {
        let f: Vec<f64> = dom.interior().iter().map(|&i| problem.f.get(i).max(delta)).collect();
        diag = Diagnostics { delta, ..Diagnostics::default() };
        u = newton(dom, &f, &consts, u, config, &mut diag)?;
    }
    let field = dom.assemble_field(&u, &consts);
    Ok(Solution { u: field, diagnostics: diag })
}

struct Workspace<'a> {
    dom: &'a GridDomain,
    scratch: Vec<f64>,
}

impl<'a> Workspace<'a> {
    fn new(dom: &'a GridDomain) -> Self {
        Self { dom, scratch: vec![0.0; dom.grid().len()] }
    }

    /// Load interior values and homogeneous ghost values into the scratch grid.
    fn load(&mut self, w: &[f64], consts: Option<&[f64]>) {
        for (&i, &x) in self.dom.interior().iter().zip(w) {
            self.scratch[i] = x;
        }
        match consts {
            Some(c) => self.dom.fill_band(&mut self.scratch, c),
            None => self.dom.fill_band_homogeneous(&mut self.scratch),
        }
    }

    fn matrices(&mut self, u: &[f64], consts: &[f64]) -> Vec<HermitianMatrix> {
        self.load(u, Some(consts));
        let op = self.dom.operator();
        let s = &self.scratch;
        par::map_range(op.len(), |k| op.a_at(s, k))
    }
}

struct State {
    mats: Vec<HermitianMatrix>,
    logres: Vec<f64>,
    norm: f64,
    det_max: f64,
    margin: f64,
}

fn evaluate(ws: &mut Workspace, u: &[f64], f: &[f64], consts: &[f64]) -> State {
    let mats = ws.matrices(u, consts);
    let margin = mats.iter().map(HermitianMatrix::min_eigenvalue).fold(f64::INFINITY, f64::min);
    let mut logres = vec![0.0; mats.len()];
    let mut det_max: f64 = 0.0;
    for (k, a) in mats.iter().enumerate() {
        let det = a.det();
        det_max = det_max.max((det - f[k]).abs());
        logres[k] = if det > 0.0 { det.ln() - f[k].ln() } else { f64::INFINITY };
    }
    let norm = logres.iter().map(|r| r * r).sum::<f64>().sqrt();
    State { mats, logres, norm, det_max, margin }
}

fn newton(
    dom: &GridDomain,
    f: &[f64],
    consts: &[f64],
    mut u: Vec<f64>,
    cfg: &SolverConfig,
    diag: &mut Diagnostics,
) -> Result<Vec<f64>> {
    let op = dom.operator();
    let nodes = op.nodes();
    let offsets = op.offsets();
    let scale = f.iter().copied().fold(1.0f64, f64::max);
    let mut ws = Workspace::new(dom);
    let mut state = evaluate(&mut ws, &u, f, consts);
    if !(state.margin > 0.0) {
        return Err(Error::LostPositivity { margin: state.margin, floor: 0.0 });
    }
    let mut last_step = f64::INFINITY;
    let mut slow = 0;
    for it in 0..=cfg.max_newton {
        diag.residual_history.push(state.det_max);
        diag.log_residual_history.push(state.norm);
        diag.margin_history.push(state.margin);
        diag.iterations = it;
        diag.residual_max = state.det_max;
        diag.psh_margin = state.margin;
        if state.det_max <= cfg.tol * scale && last_step <= cfg.tol {
            diag.converged = true;
            return Ok(u);
        }
        if it == cfg.max_newton {
            break;
        }

        let comb: Vec<Terms> = par::map_range(op.len(), |k| {
            let b = state.mats[k].inverse().expect("positive definite iterate");
            op.coefficients(k).combine(&trace_weights(&b))
        });
        let diagonal: Vec<f64> = comb.iter().map(|c| offsets.centre_weight(c)).collect();
        let rhs: Vec<f64> = state.logres.iter().map(|r| -r).collect();
        let mut delta = vec![0.0; u.len()];
        let mut jws = Workspace::new(dom);
        let scratch_cell = std::cell::RefCell::new(&mut jws);
        let apply = |x: &[f64], y: &mut [f64]| {
            let mut w = scratch_cell.borrow_mut();
            w.load(x, None);
            let s = &w.scratch;
            par::for_each_indexed(y, |k, out| {
                let t = offsets.terms(s, nodes[k]);
                *out = comb[k].iter().zip(&t).map(|(c, v)| c * v).sum();
            });
        };
        let stats = bicgstab(apply, &diagonal, &rhs, &mut delta, cfg.forcing, cfg.max_linear_iterations);
        diag.linear_iterations.push(stats.iterations);

        let cap = cfg.damping_caps.get(it).copied().unwrap_or(1.0).min(1.0);
        let floor = cfg.margin_floor_fraction * state.margin;
        let mut t = cap;
        let mut accepted = None;
        let mut positivity_seen = false;
        let mut best_margin = f64::NEG_INFINITY;
        for _ in 0..=cfg.max_backtracks {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
            let ts = evaluate(&mut ws, &trial, f, consts);
            best_margin = best_margin.max(ts.margin);
            if ts.margin >= floor && ts.margin > 0.0 {
                positivity_seen = true;
                if ts.norm < state.norm {
                    accepted = Some((trial, ts));
                    break;
                }
            }
            t *= cfg.backtrack;
        }
        let Some((trial, ts)) = accepted else {
            if !positivity_seen {
                return Err(Error::LostPositivity { margin: best_margin, floor });
            }
            return Err(Error::NewtonStalled { iterations: it, residual: state.det_max });
        };
        let dmax = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        last_step = t * dmax;
        diag.damping_history.push(t);
        diag.step_history.push(last_step);
        if ts.norm > (1.0 - 1e-3) * state.norm {
            slow += 1;
            if slow >= 5 {
                return Err(Error::NewtonStalled { iterations: it + 1, residual: ts.det_max });
            }
        } else {
            slow = 0;
        }
        u = trial;
        state = ts;
    }
    Err(Error::NewtonStalled { iterations: cfg.max_newton, residual: state.det_max })
}

/// Outcome of [`comparison_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonVerdict {
    HypothesesUnmet,
    Holds,
    Violation,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub verdict: ComparisonVerdict,
    /// Largest `u - v` over interior nodes.
    pub max_excess: f64,
    pub tolerance: f64,
    pub reason: String,
}

/// Sandwich tolerance `10 (tol + h^2) max(1, scale)`.
pub fn sandwich_tolerance(tol: f64, h: f64, scale: f64) -> f64 {
    10.0 * (tol + h * h) * scale.max(1.0)
}

/// If `u` is psh, `det A(u) >= det A(v)` where `A(v) > 0`, and `u <= v` on the
/// boundary, check `u <= v + tau` inside.
pub fn comparison_check(domain: &GridDomain, u: &ScalarField, v: &ScalarField, tol: f64) -> ComparisonReport {
    let op = domain.operator();
    let scale = active_max_abs(domain, u).max(active_max_abs(domain, v)).max(1.0);
    let tau = sandwich_tolerance(tol, domain.h(), scale);
    let report = |verdict, max_excess, reason: &str| ComparisonReport {
        verdict,
        max_excess,
        tolerance: tau,
        reason: reason.to_string(),
    };
    let au = op.a_field(u);
    let av = op.a_field(v);
    let umin = au.iter().map(HermitianMatrix::min_eigenvalue).fold(f64::INFINITY, f64::min);
    let psh_tol = 1e-8 * scale;
    if umin < -psh_tol {
        return report(ComparisonVerdict::HypothesesUnmet, f64::NAN, "u is not psh");
    }
    let (tu, tv) = (domain.boundary_trace(u), domain.boundary_trace(v));
    if tu.iter().zip(&tv).any(|(a, b)| a > &(b + tau)) {
        return report(ComparisonVerdict::HypothesesUnmet, f64::NAN, "u > v on the boundary");
    }
    let dmax = au.iter().chain(&av).map(|a| a.det().abs()).fold(1.0f64, f64::max);
    let det_tol = 10.0 * tol * dmax;
    for (a, b) in au.iter().zip(&av) {
        if b.min_eigenvalue() > psh_tol && a.det() < b.det() - det_tol {
            return report(ComparisonVerdict::HypothesesUnmet, f64::NAN, "det A(u) < det A(v) where A(v) > 0");
        }
    }
    let excess = domain.interior().iter().map(|&i| u.get(i) - v.get(i)).fold(f64::NEG_INFINITY, f64::max);
    if excess <= tau {
        report(ComparisonVerdict::Holds, excess, "")
    } else {
        report(ComparisonVerdict::Violation, excess, "u exceeds v inside")
    }
}

/// Measured bounds on a converged solution.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub tolerance: f64,
    pub m_rho: f64,
    pub f_root_max: f64,
    pub boundary_inf: f64,
    pub boundary_sup: f64,
    /// Largest violation of `|f^{1/n}| m rho + inf phi <= u <= sup phi`
    /// (negative when it holds with room).
    pub uniform_bound_excess: f64,
    pub uniform_bound_holds: bool,
    pub barrier_a: f64,
    pub barrier_excess: f64,
    pub barrier_holds: bool,
    pub max_gradient: f64,
    pub max_hessian_eigenvalue: f64,
}

pub fn estimate_report(solution: &Solution, problem: &MAProblem, tol: f64) -> Result<EstimateReport> {
    let dom = &problem.domain;
    let u = &solution.u;
    let n = dom.n() as f64;
    let delta = solution.diagnostics.delta;
    let tau = sandwich_tolerance(tol, dom.h(), active_max_abs(dom, u));
    let m = m_rho(dom, dom.rho())?;
    let f_root_max =
        dom.interior().iter().map(|&i| problem.f.get(i).max(delta).max(0.0).powf(1.0 / n)).fold(0.0, f64::max);
    let feet: Vec<f64> = dom.band().iter().map(|b| problem.phi.value(&b.foot)).collect();
    let binf = feet.iter().copied().fold(f64::INFINITY, f64::min);
    let bsup = feet.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rho = dom.rho();
    let mut excess = f64::NEG_INFINITY;
    for &i in dom.interior() {
        let lower = f_root_max * m * rho.get(i) + binf;
        excess = excess.max(lower - u.get(i)).max(u.get(i) - bsup);
    }
    let barriers = problem.barriers()?;
    let mut bex = f64::NEG_INFINITY;
    for &i in dom.interior() {
        bex = bex.max(barriers.lower.get(i) - u.get(i)).max(u.get(i) - barriers.upper.get(i));
    }
    let d = dom.grid().dim();
    let stats = par::map_range(dom.interior().len(), |k| {
        let i = dom.interior()[k];
        let g = u.gradient_at(i).map_or(0.0, |g| g.iter().map(|x| x * x).sum::<f64>().sqrt());
        let e = u.hessian_at(i).map_or(0.0, |hs| {
            let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, &hs));
            eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        });
        (g, e)
    });
    let (max_gradient, max_hessian_eigenvalue) =
        stats.iter().fold((0.0f64, 0.0f64), |(a, b), (g, e)| (a.max(*g), b.max(*e)));
    Ok(EstimateReport {
        tolerance: tau,
        m_rho: m,
        f_root_max,
        boundary_inf: binf,
        boundary_sup: bsup,
        uniform_bound_excess: excess,
        uniform_bound_holds: excess <= tau,
        barrier_a: barriers.a,
        barrier_excess: bex,
        barrier_holds: bex <= tau,
        max_gradient,
        max_hessian_eigenvalue,
    })
}

/// Whether the gradient and Hessian monitors grow by at most `max_ratio`
/// between successive refinements.
pub fn bounded_growth(reports: &[EstimateReport], max_ratio: f64) -> bool {
    reports.windows(2).all(|w| {
        w[1].max_gradient <= max_ratio * w[0].max_gradient.max(1e-12)
            && w[1].max_hessian_eigenvalue <= max_ratio * w[0].max_hessian_eigenvalue.max(1e-12)
    })
}

/// Largest `|u|` over interior and band nodes.
pub fn active_max_abs(domain: &GridDomain, u: &ScalarField) -> f64 {
    u.values()
        .iter()
        .enumerate()
        .filter(|(i, v)| domain.is_active(*i) && v.is_finite())
        .fold(0.0, |m, (_, v)| m.max(v.abs()))
}

/// Largest `|a - b|` over interior nodes.
pub fn max_interior_diff(domain: &GridDomain, a: &ScalarField, b: &ScalarField) -> f64 {
    domain.interior().iter().map(|&i| (a.get(i) - b.get(i)).abs()).fold(0.0, f64::max)
}

/// Largest `|u - exact|` over interior nodes.
pub fn max_error(domain: &GridDomain, u: &ScalarField, exact: &dyn PointFn) -> f64 {
    domain.interior().iter().map(|&i| (u.get(i) - exact.value(&domain.grid().point(i))).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{grid_build, DefiningFunction};
    use crate::geometry::{AlmostComplexStructure, BoundingBox};

    fn ball(n: usize, h: f64, j: AlmostComplexStructure) -> Arc<GridDomain> {
        Arc::new(grid_build(&DefiningFunction::Ball, &BoundingBox::cube(2 * n, 1.25), h, &j).unwrap())
    }

    fn abs_sq(p: &[f64]) -> f64 {
        p.iter().map(|x| x * x).sum()
    }

    #[test]
    fn ball_solution_is_close_to_exact() {
        let dom = ball(2, 0.25, AlmostComplexStructure::standard(2));
        let prob = MAProblem::from_fns(dom.clone(), &|_: &[f64]| 1.0, Arc::new(|_: &[f64]| 0.0)).unwrap();
        let sol = solve_dirichlet(&prob, &SolverConfig::default()).unwrap();
        assert!(sol.diagnostics.converged);
        let err = max_error(&dom, &sol.u, &|p: &[f64]| abs_sq(p) - 1.0);
        assert!(err < 10.0 * 0.5 * 0.0625, "err {err}");
        let h = &sol.diagnostics.log_residual_history;
        assert!(h.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn vanishing_rhs_needs_delta() {
        let dom = ball(1, 0.25, AlmostComplexStructure::standard(1));
        let prob = MAProblem::from_fns(dom, &|_: &[f64]| 0.0, Arc::new(|p: &[f64]| p[0])).unwrap();
        assert!(matches!(solve_dirichlet(&prob, &SolverConfig::default()), Err(Error::InvalidInput(_))));
        let cfg = SolverConfig { delta_schedule: vec![1e-2, 1e-4], ..SolverConfig::default() };
        let sol = solve_dirichlet(&prob, &cfg).unwrap();
        assert_eq!(sol.diagnostics.delta, 1e-4);
    }

    #[test]
    fn comparison_examples() {
        let dom = ball(2, 0.25, AlmostComplexStructure::standard(2));
        let g = dom.grid().clone();
        let u = ScalarField::from_fn(g.clone(), &|p: &[f64]| abs_sq(p) - 1.0);
        let v = ScalarField::filled(g, 0.0);
        assert_eq!(comparison_check(&dom, &u, &v, 1e-8).verdict, ComparisonVerdict::Holds);
        assert_eq!(comparison_check(&dom, &u, &u, 1e-8).verdict, ComparisonVerdict::Holds);
        let w = u.map(|x| x + 2.0);
        assert_eq!(comparison_check(&dom, &w, &u, 1e-8).verdict, ComparisonVerdict::HypothesesUnmet);
    }

    #[test]
    fn estimate_report_for_ball() {
        let dom = ball(2, 0.25, AlmostComplexStructure::standard(2));
        let prob = MAProblem::from_fns(dom, &|_: &[f64]| 1.0, Arc::new(|_: &[f64]| 0.0)).unwrap();
        let cfg = SolverConfig::default();
        let sol = solve_dirichlet(&prob, &cfg).unwrap();
        let rep = estimate_report(&sol, &prob, cfg.tol).unwrap();
        assert!(rep.uniform_bound_holds, "{rep:?}");
        assert!(rep.barrier_holds, "{rep:?}");
        assert!((rep.m_rho - 1.0).abs() < 1e-12);
    }
}

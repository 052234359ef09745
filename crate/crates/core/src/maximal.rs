//! Maximal psh functions as limits of Dirichlet solutions with vanishing
//! right-hand side `det A(rho) / k^n`, and randomized checks of maximality,
//! F(J)-harmonicity and locality.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::domain::{DefiningFunction, GridDomain};
use crate::error::{Error, Result};
use crate::field::{PointFn, ScalarField, SharedFn};
use crate::par;
use crate::solver::{
    active_max_abs, sandwich_tolerance, solve_dirichlet_from, Diagnostics, MAProblem, Solution, SolverConfig,
};

/// Default schedule of `k`.
pub const DEFAULT_SCHEDULE: [usize; 5] = [2, 4, 8, 16, 32];

/// One solve of the schedule.
#[derive(Clone, Debug, Serialize)]
pub struct MaximalStep {
    pub k: usize,
    /// `max |u_k - u_prev|` over interior nodes (`NaN` for the first step).
    pub difference: f64,
    pub lipschitz: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug)]
pub struct MaximalRun {
    pub schedule: Vec<usize>,
    pub iterates: Vec<Solution>,
    pub steps: Vec<MaximalStep>,
    /// Last iterate.
    pub limit: ScalarField,
    /// Richardson extrapolation in `1/k` from the last two iterates.
    pub extrapolated: ScalarField,
    pub lipschitz_estimate: f64,
    /// Largest `u_k - u_{k'}` for `k < k'` over interior nodes.
    pub monotonicity_defect: f64,
    pub tolerance: f64,
}

impl MaximalRun {
    pub fn is_monotone(&self) -> bool {
        self.monotonicity_defect <= self.tolerance
    }

    /// Largest relative spread `(max - min) / min` of the Lipschitz constants.
    pub fn lipschitz_spread(&self) -> f64 {
        let l: Vec<f64> = self.steps.iter().map(|s| s.lipschitz).collect();
        let lo = l.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = l.iter().copied().fold(0.0, f64::max);
        (hi - lo) / lo.max(1e-300)
    }
}

/// Largest difference quotient `|u(i + e_a) - u(i)| / h` over pairs of
/// interior nodes.
pub fn discrete_lipschitz(domain: &GridDomain, u: &ScalarField) -> f64 {
    let grid = domain.grid();
    let d = grid.dim();
    let h = grid.h();
    let nodes = domain.interior();
    par::map_range(nodes.len(), |k| {
        let i = nodes[k];
        let mut m: f64 = 0.0;
        for a in 0..d {
            let j = i + grid.strides()[a];
            if j < grid.len() && domain.class(j) == crate::domain::PointClass::Interior {
                m = m.max((u.get(j) - u.get(i)).abs() / h);
            }
        }
        m
    })
    .into_iter()
    .fold(0.0, f64::max)
}

/// `f_k = det A(rho) / k^n` at interior nodes, `NaN` elsewhere.
pub fn vanishing_rhs(domain: &GridDomain, k: usize) -> ScalarField {
    let op = domain.operator();
    let rv = domain.rho().values();
    let scale = (k as f64).powi(domain.n() as i32);
    let dets = par::map_range(op.len(), |p| op.a_at(rv, p).det() / scale);
    let mut v = vec![f64::NAN; domain.grid().len()];
    for (&i, x) in op.nodes().iter().zip(dets) {
        v[i] = x;
    }
    ScalarField::new(domain.grid().clone(), v).expect("grid-sized field")
}

/// Solve `det A(u_k) = det A(rho) / k^n`, `u_k = phi` on the boundary, for each
/// `k` of `schedule`, each solve starting from the previous one.
pub fn solve_maximal(
    domain: Arc<GridDomain>,
    phi: SharedFn,
    schedule: &[usize],
    config: &SolverConfig,
) -> Result<MaximalRun> {
    if schedule.len() < 2 || schedule.windows(2).any(|w| w[1] <= w[0]) || schedule[0] == 0 {
        return Err(Error::InvalidInput("schedule must hold at least two increasing k".into()));
    }
    let mut iterates: Vec<Solution> = Vec::new();
    let mut steps = Vec::new();
    for &k in schedule {
        let problem = MAProblem::new(domain.clone(), vanishing_rhs(&domain, k), phi.clone())?;
        let sol = solve_dirichlet_from(&problem, config, iterates.last().map(|s| &s.u))?;
        let difference = iterates.last().map_or(f64::NAN, |p| interior_diff(&domain, &sol.u, &p.u).1);
        steps.push(MaximalStep {
            k,
            difference,
            lipschitz: discrete_lipschitz(&domain, &sol.u),
            diagnostics: sol.diagnostics.clone(),
        });
        iterates.push(sol);
    }

    let diffs: Vec<f64> = steps[1..].iter().map(|s| s.difference).collect();
    if diffs.len() >= 2 {
        let m = diffs.len();
        let (k0, k1, k2) = (schedule[m - 2] as f64, schedule[m - 1] as f64, schedule[m] as f64);
        // Rate fitted on the previous difference, assuming an O(1/k) error.
        let c = diffs[m - 2] / (1.0 / k0 - 1.0 / k1);
        let tail = c / k2;
        if diffs[m - 1] > 10.0 * tail.max(config.tol) {
            return Err(Error::ScheduleTooShort { last: diffs[m - 1], tail });
        }
    }

    let scale = iterates.iter().map(|s| active_max_abs(&domain, &s.u)).fold(1.0, f64::max);
    let tolerance = sandwich_tolerance(config.tol, domain.h(), scale);
    let mut monotonicity_defect = f64::NEG_INFINITY;
    for w in iterates.windows(2) {
        monotonicity_defect = monotonicity_defect.max(interior_diff(&domain, &w[0].u, &w[1].u).0);
    }
    let last = iterates.last().expect("nonempty schedule");
    let prev = &iterates[iterates.len() - 2];
    let (ka, kb) = (schedule[schedule.len() - 2] as f64, schedule[schedule.len() - 1] as f64);
    let extrapolated = last.u.zip_map(&prev.u, |b, a| (kb * b - ka * a) / (kb - ka));
    let limit = last.u.clone();
    Ok(MaximalRun {
        schedule: schedule.to_vec(),
        lipschitz_estimate: discrete_lipschitz(&domain, &limit),
        limit,
        extrapolated,
        iterates,
        steps,
        monotonicity_defect,
        tolerance,
    })
}

/// `(max (a - b), max |a - b|)` over interior nodes.
fn interior_diff(domain: &GridDomain, a: &ScalarField, b: &ScalarField) -> (f64, f64) {
    domain.interior().iter().fold((f64::NEG_INFINITY, 0.0f64), |(s, m), &i| {
        let d = a.get(i) - b.get(i);
        (s.max(d), m.max(d.abs()))
    })
}

/// A Euclidean ball.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ball {
    pub centre: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, p: &[f64]) -> bool {
        dist(p, &self.centre) < self.radius
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Overlapping balls: one at the centre and one on each side of the first
/// `count - 1` coordinate directions, each of radius `0.55 R`.
pub fn default_cover(domain: &GridDomain, count: usize) -> Vec<Ball> {
    let c = domain.centre().to_vec();
    let r = domain.radius();
    let d = c.len();
    let mut out = vec![Ball { centre: c.clone(), radius: 0.55 * r }];
    let mut a = 0;
    while out.len() < count {
        let axis = (a / 2) % d;
        let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
        let mut p = c.clone();
        p[axis] += sign * 0.4 * r;
        out.push(Ball { centre: p, radius: 0.55 * r });
        a += 1;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVerdict {
    Holds,
    Violation,
}

/// Outcome of a randomized probe battery.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub verdict: ProbeVerdict,
    pub trials: usize,
    /// Probes actually tested (psh on the grid, nonempty regions).
    pub accepted: usize,
    pub rejected_not_psh: usize,
    pub rejected_geometry: usize,
    pub violations: usize,
    /// Largest excess found (probe minus `u`, or probe margin at a contact).
    pub max_excess: f64,
    pub tolerance: f64,
}

impl ProbeReport {
    fn new(trials: usize, tolerance: f64) -> Self {
        Self {
            verdict: ProbeVerdict::Holds,
            trials,
            accepted: 0,
            rejected_not_psh: 0,
            rejected_geometry: 0,
            violations: 0,
            max_excess: f64::NEG_INFINITY,
            tolerance,
        }
    }

    fn finish(mut self) -> Self {
        self.verdict = if self.violations > 0 { ProbeVerdict::Violation } else { ProbeVerdict::Holds };
        self
    }

    pub fn holds(&self) -> bool {
        self.verdict == ProbeVerdict::Holds
    }
}

/// `(x - c)^T M (x - c) + b . x` with eigenvalues of `M` in `[0.1, 1]`.
#[derive(Clone, Debug)]
pub struct QuadraticProbe {
    pub centre: Vec<f64>,
    pub m: DMatrix<f64>,
    pub linear: Vec<f64>,
}

impl QuadraticProbe {
    pub fn random<R: Rng + ?Sized>(centre: Vec<f64>, rng: &mut R) -> Self {
        let d = centre.len();
        let g = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
        let q = g.qr().q();
        let eig = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |_, _| rng.random_range(0.1..=1.0)));
        Self { centre, m: &q * eig * q.transpose(), linear: vec![0.0; d] }
    }

    /// Add the affine part making the gradient equal `target` at `p`.
    pub fn tangent_to(mut self, p: &[f64], target: &[f64]) -> Self {
        self.linear = vec![0.0; p.len()];
        let g = self.gradient(p);
        self.linear = target.iter().zip(g).map(|(t, g)| t - g).collect();
        self
    }
}

impl PointFn for QuadraticProbe {
    fn value(&self, p: &[f64]) -> f64 {
        let d = p.len();
        let mut s = 0.0;
        for a in 0..d {
            s += self.linear[a] * p[a];
            for b in 0..d {
                s += (p[a] - self.centre[a]) * self.m[(a, b)] * (p[b] - self.centre[b]);
            }
        }
        s
    }

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let d = p.len();
        (0..d)
            .map(|a| self.linear[a] + 2.0 * (0..d).map(|b| self.m[(a, b)] * (p[b] - self.centre[b])).sum::<f64>())
            .collect()
    }
}

/// Options shared by the probe batteries.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeOptions {
    pub trials: usize,
    /// Solver tolerance entering `tau`.
    pub tol: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { trials: 100, tol: 1e-8 }
    }
}

/// `(tol + h^2) max(1, |u|)`.
fn probe_tolerance(domain: &GridDomain, u: &ScalarField, tol: f64) -> f64 {
    (tol + domain.h().powi(2)) * active_max_abs(domain, u).max(1.0)
}

/// Smallest eigenvalue of `A(q)` over the interior nodes.
fn probe_margin(domain: &GridDomain, q: &QuadraticProbe) -> f64 {
    let field = ScalarField::from_fn(domain.grid().clone(), q);
    let op = domain.operator();
    let v = field.values();
    par::map_range(op.len(), |k| op.a_at(v, k).min_eigenvalue()).into_iter().fold(f64::INFINITY, f64::min)
}

/// Distance from `p` to the nearest boundary foot point.
fn clearance(domain: &GridDomain, p: &[f64]) -> f64 {
    domain.band().iter().map(|b| dist(&b.foot, p)).fold(f64::INFINITY, f64::min)
}

fn random_interior_point<R: Rng + ?Sized>(domain: &GridDomain, region: Option<&Ball>, rng: &mut R) -> Option<Vec<f64>> {
    let nodes = domain.interior();
    for _ in 0..64 {
        let p = domain.grid().point(nodes[rng.random_range(0..nodes.len())]);
        if region.is_none_or(|b| b.contains(&p)) {
            return Some(p);
        }
    }
    None
}

/// One maximality trial inside `region` (the whole domain when `None`):
/// a psh quadratic with the slope of `u` at the centre of a random ball `K`,
/// shifted to lie below `u` on `region \ K`, compared with `u` on `K`.
fn maximality_trial<R: Rng + ?Sized>(
    domain: &GridDomain,
    u: &ScalarField,
    region: Option<&Ball>,
    report: &mut ProbeReport,
    rng: &mut R,
) {
    let h = domain.h();
    let big = region.map_or(domain.radius(), |b| b.radius);
    let kr = rng.random_range(0.2..=0.6) * big;
    let mut centre = None;
    for _ in 0..64 {
        let Some(p) = random_interior_point(domain, region, rng) else { break };
        let room = region.map_or(f64::INFINITY, |b| b.radius - dist(&p, &b.centre));
        if room > kr + h && clearance(domain, &p) > kr + h {
            centre = Some(p);
            break;
        }
    }
    let Some(kc) = centre else {
        report.rejected_geometry += 1;
        return;
    };
    let Some(qc) = random_interior_point(domain, None, rng) else {
        report.rejected_geometry += 1;
        return;
    };
    let Some(slope) = domain.grid().locate(&kc).and_then(|i| u.gradient_at(i)) else {
        report.rejected_geometry += 1;
        return;
    };
    let q = QuadraticProbe::random(qc, rng).tangent_to(&kc, &slope);
    if probe_margin(domain, &q) < -1e-10 {
        report.rejected_not_psh += 1;
        return;
    }
    let grid = domain.grid();
    let mut outside = f64::INFINITY;
    let mut inside = f64::INFINITY;
    for &i in domain.interior() {
        let p = grid.point(i);
        if region.is_some_and(|b| !b.contains(&p)) {
            continue;
        }
        let gap = u.get(i) - q.value(&p);
        if dist(&p, &kc) < kr {
            inside = inside.min(gap);
        } else {
            outside = outside.min(gap);
        }
    }
    if !inside.is_finite() || !outside.is_finite() {
        report.rejected_geometry += 1;
        return;
    }
    report.accepted += 1;
    // v = q + outside lies below u off K; its excess over u on K:
    let excess = outside - inside;
    report.max_excess = report.max_excess.max(excess);
    if excess > report.tolerance {
        report.violations += 1;
    }
}

/// Randomized search for psh `v <= u` off a compact ball with `v > u + tau`
/// somewhere on the ball. Can only find violations.
pub fn maximality_probe<R: Rng + ?Sized>(
    domain: &GridDomain,
    u: &ScalarField,
    opts: &ProbeOptions,
    rng: &mut R,
) -> ProbeReport {
    let mut report = ProbeReport::new(opts.trials, probe_tolerance(domain, u, opts.tol));
    for _ in 0..opts.trials {
        maximality_trial(domain, u, None, &mut report, rng);
    }
    report.finish()
}

/// For strictly psh quadratics, tangent to `u` at a random node and shifted
/// to touch `u` from below on each subregion,
/// any near-contact node (gap `<= tau`) away from the subregion's edge where
/// the probe is still strictly psh is a violation.
pub fn fj_harmonic_check<R: Rng + ?Sized>(
    domain: &GridDomain,
    u: &ScalarField,
    subregions: &[Ball],
    opts: &ProbeOptions,
    rng: &mut R,
) -> ProbeReport {
    let tau = probe_tolerance(domain, u, opts.tol);
    let mut report = ProbeReport::new(opts.trials * subregions.len(), tau);
    let grid = domain.grid();
    let h = domain.h();
    let op = domain.operator();
    for region in subregions {
        let nodes: Vec<usize> =
            domain.interior().iter().copied().filter(|&i| region.contains(&grid.point(i))).collect();
        for _ in 0..opts.trials {
            let Some(qc) = random_interior_point(domain, Some(region), rng) else {
                report.rejected_geometry += 1;
                continue;
            };
            let slope = domain.grid().locate(&qc).and_then(|i| u.gradient_at(i));
            let Some(slope) = slope else {
                report.rejected_geometry += 1;
                continue;
            };
            let q = QuadraticProbe::random(qc.clone(), rng).tangent_to(&qc, &slope);
            if nodes.is_empty() {
                report.rejected_geometry += 1;
                continue;
            }
            let gaps: Vec<f64> = nodes.iter().map(|&i| u.get(i) - q.value(&grid.point(i))).collect();
            let min = gaps.iter().copied().fold(f64::INFINITY, f64::min);
            report.accepted += 1;
            let qfield = ScalarField::from_fn(grid.clone(), &q);
            let mut violated = false;
            for (&i, &g) in nodes.iter().zip(&gaps) {
                let p = grid.point(i);
                if g - min > tau || dist(&p, &region.centre) > region.radius - 2.0 * h {
                    continue;
                }
                let pos = op.position(i).expect("interior node");
                let margin = op.a_at(qfield.values(), pos).min_eigenvalue();
                report.max_excess = report.max_excess.max(margin);
                if margin > tau {
                    violated = true;
                }
            }
            if violated {
                report.violations += 1;
            }
        }
    }
    report.finish()
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalityReport {
    pub local: Vec<ProbeReport>,
    pub global: ProbeReport,
    pub all_local_hold: bool,
    /// Local and global verdicts agree.
    pub consistent: bool,
}

/// Maximality probes restricted to each ball of `cover`, and globally.
pub fn locality_check<R: Rng + ?Sized>(
    domain: &GridDomain,
    u: &ScalarField,
    cover: &[Ball],
    opts: &ProbeOptions,
    rng: &mut R,
) -> LocalityReport {
    let tau = probe_tolerance(domain, u, opts.tol);
    let local: Vec<ProbeReport> = cover
        .iter()
        .map(|b| {
            let mut r = ProbeReport::new(opts.trials, tau);
            for _ in 0..opts.trials {
                maximality_trial(domain, u, Some(b), &mut r, rng);
            }
            r.finish()
        })
        .collect();
    let global = maximality_probe(domain, u, opts, rng);
    let all_local_hold = local.iter().all(ProbeReport::holds);
    LocalityReport { consistent: all_local_hold == global.holds(), all_local_hold, local, global }
}

/// Boundary data `-|z - P|^{1 + alpha}`.
pub fn holder_data(p: Vec<f64>, alpha: f64) -> SharedFn {
    Arc::new(crate::field::Analytic {
        value: {
            let p = p.clone();
            move |x: &[f64]| -dist(x, &p).powf(1.0 + alpha)
        },
        gradient: move |x: &[f64]| {
            let r = dist(x, &p);
            if r == 0.0 {
                return vec![0.0; x.len()];
            }
            let s = -(1.0 + alpha) * r.powf(alpha - 1.0);
            x.iter().zip(&p).map(|(a, b)| s * (a - b)).collect()
        },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderFit {
    pub h: f64,
    pub distances: Vec<f64>,
    /// `u(P) - u(P - t n)` at each distance.
    pub drops: Vec<f64>,
    pub beta: f64,
    pub constant: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderReport {
    pub alpha: f64,
    pub point: Vec<f64>,
    pub fits: Vec<HolderFit>,
    /// Exponent on the finest grid.
    pub beta: f64,
    /// Largest change of the exponent between successive grids.
    pub stability: f64,
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Options for [`holder_experiment`].
#[derive(Clone, Debug)]
pub struct HolderOptions {
    pub distances: Vec<f64>,
    pub schedule: Vec<usize>,
    pub solver: SolverConfig,
    /// Half side of the grid box around the unit ball.
    pub box_half: f64,
}

impl Default for HolderOptions {
    fn default() -> Self {
        Self {
            distances: vec![0.125, 0.25, 0.5],
            schedule: DEFAULT_SCHEDULE.to_vec(),
            solver: SolverConfig::default(),
            box_half: 1.25,
        }
    }
}

/// Maximal solution on the unit ball with data `-|z - P|^{1 + alpha}` for each
/// grid spacing, and the exponent `beta` of `u(P) - u(P - t n) ~ c t^beta`.
pub fn holder_experiment(
    structure: &crate::geometry::AlmostComplexStructure,
    alpha: f64,
    point: &[f64],
    hs: &[f64],
    opts: &HolderOptions,
) -> Result<HolderReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("alpha {alpha} outside (0, 1]")));
    }
    let norm = point.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput("P must lie on the unit sphere".into()));
    }
    let d = structure.dim();
    let bbox = crate::geometry::BoundingBox::cube(d, opts.box_half);
    let phi = holder_data(point.to_vec(), alpha);
    let mut fits = Vec::new();
    for &h in hs {
        let domain = Arc::new(crate::domain::grid_build(&DefiningFunction::Ball, &bbox, h, structure)?);
        let run = solve_maximal(domain.clone(), phi.clone(), &opts.schedule, &opts.solver)?;
        let u = &run.limit;
        let at = |x: &[f64]| -> Result<f64> {
            match domain.grid().locate(x) {
                Some(i) if u.get(i).is_finite() => Ok(u.get(i)),
                _ => u.interpolate(x).ok_or_else(|| Error::InvalidInput(format!("no solution value at {x:?}"))),
            }
        };
        let up = phi.value(point);
        let mut drops = Vec::new();
        for &t in &opts.distances {
            let x: Vec<f64> = point.iter().map(|p| p * (1.0 - t)).collect();
            let drop = up - at(&x)?;
            if !(drop > 0.0) {
                return Err(Error::InvalidInput(format!("solution does not decrease inward at t = {t}")));
            }
            drops.push(drop);
        }
        let lx: Vec<f64> = opts.distances.iter().map(|t| t.ln()).collect();
        let ly: Vec<f64> = drops.iter().map(|v| v.ln()).collect();
        let (beta, c) = fit_line(&lx, &ly);
        fits.push(HolderFit { h, distances: opts.distances.clone(), drops, beta, constant: c.exp() });
    }
    let beta = fits.last().map_or(f64::NAN, |f| f.beta);
    let stability = fits.windows(2).map(|w| (w[1].beta - w[0].beta).abs()).fold(0.0, f64::max);
    Ok(HolderReport { alpha, point: point.to_vec(), fits, beta, stability })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::grid_build;
    use crate::geometry::{AlmostComplexStructure, BoundingBox};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ball(h: f64) -> Arc<GridDomain> {
        let j = AlmostComplexStructure::standard(2);
        Arc::new(grid_build(&DefiningFunction::Ball, &BoundingBox::cube(4, 1.25), h, &j).unwrap())
    }

    #[test]
    fn x1_is_the_maximal_limit() {
        let dom = ball(0.25);
        let run = solve_maximal(dom.clone(), Arc::new(|p: &[f64]| p[0]), &DEFAULT_SCHEDULE, &SolverConfig::default())
            .unwrap();
        assert!(run.is_monotone(), "defect {}", run.monotonicity_defect);
        let err = crate::solver::max_error(&dom, &run.limit, &|p: &[f64]| p[0]);
        assert!(err <= 2.0 * (0.0625 + 1.0 / 32.0), "err {err}");
        let err = crate::solver::max_error(&dom, &run.extrapolated, &|p: &[f64]| p[0]);
        assert!(err < 1e-6, "extrapolated err {err}");
    }

    #[test]
    fn schedule_is_validated() {
        let dom = ball(0.25);
        let r = solve_maximal(dom, Arc::new(|p: &[f64]| p[0]), &[4], &SolverConfig::default());
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn probes_separate_maximal_from_strictly_psh() {
        let dom = ball(0.25);
        let g = dom.grid().clone();
        let x1 = ScalarField::from_fn(g.clone(), &|p: &[f64]| p[0]);
        let sq = ScalarField::from_fn(g, &|p: &[f64]| p.iter().map(|x| x * x).sum::<f64>() - 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let opts = ProbeOptions { trials: 40, tol: 1e-8 };
        let r = maximality_probe(&dom, &x1, &opts, &mut rng);
        assert!(r.holds(), "{r:?}");
        let r = maximality_probe(&dom, &sq, &opts, &mut rng);
        assert!(!r.holds(), "{r:?}");
        let cover = default_cover(&dom, 4);
        assert!(fj_harmonic_check(&dom, &x1, &cover, &opts, &mut rng).holds());
        assert!(!fj_harmonic_check(&dom, &sq, &cover, &opts, &mut rng).holds());
    }

    #[test]
    fn fit_line_recovers_slope() {
        let x = [0.0, 1.0, 2.0];
        let y = [1.0, 3.5, 6.0];
        let (s, c) = fit_line(&x, &y);
        assert!((s - 2.5).abs() < 1e-14 && (c - 1.0).abs() < 1e-14);
    }
}

//! Strictly pseudoconvex domains `{rho < 0}` on a uniform grid, boundary
//! bookkeeping, the constant `m(rho)` and barrier construction.
//!
//! Nodes are interior when `rho < 0`; the band is every non-interior node
//! touched by an interior stencil. A band node `b` with foot point `F` gets
//! its value from the quadratic in the normal coordinate through the
//! boundary value at `F` and two points on the inward normal, each read by
//! tensor quadratic interpolation of interior nodes.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Grid, PointFn, ScalarField, SharedFn};
use crate::geometry::{split_frame, AlmostComplexStructure, BoundingBox, Frame, HermitianMetric};
use crate::linalg::HermitianMatrix;
use crate::operator::MaOperator;
use crate::par;

/// Defining function of a domain.
#[derive(Clone)]
pub enum DefiningFunction {
    /// `|z|^2 - 1`.
    Ball,
    /// `sum (x_i / a_i)^2 - 1`; one semi-axis per real coordinate, or one per
    /// complex coordinate shared by its real and imaginary parts.
    Ellipsoid(Vec<f64>),
    Custom(SharedFn),
}

impl std::fmt::Debug for DefiningFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Ball => write!(f, "Ball"),
            Self::Ellipsoid(a) => write!(f, "Ellipsoid({a:?})"),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl DefiningFunction {
    fn axis(&self, a: usize, d: usize) -> f64 {
        match self {
            Self::Ellipsoid(ax) if ax.len() == d => ax[a],
            Self::Ellipsoid(ax) => ax[a / 2],
            _ => 1.0,
        }
    }
}

impl PointFn for DefiningFunction {
    fn value(&self, p: &[f64]) -> f64 {
        match self {
            Self::Custom(f) => f.value(p),
            _ => {
                let d = p.len();
                p.iter().enumerate().map(|(a, x)| (x / self.axis(a, d)).powi(2)).sum::<f64>() - 1.0
            }
        }
    }

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        match self {
            Self::Custom(f) => f.gradient(p),
            _ => {
                let d = p.len();
                p.iter().enumerate().map(|(a, x)| 2.0 * x / self.axis(a, d).powi(2)).collect()
            }
        }
    }

    fn contains(&self, p: &[f64]) -> bool {
        match self {
            Self::Custom(f) => f.contains(p),
            _ => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    Interior,
    Band,
    Exterior,
}

/// A point on the inward normal of a foot point, read by tensor quadratic
/// interpolation from `3^d` interior nodes.
#[derive(Clone, Debug, Serialize)]
pub struct NormalSample {
    /// Normal coordinate (negative inside).
    pub s: f64,
    base: usize,
    weights: [[f64; 3]; 4],
}

impl NormalSample {
    pub fn eval(&self, values: &[f64], strides: &[usize]) -> f64 {
        fn rec(values: &[f64], strides: &[usize], w: &[[f64; 3]; 4], axis: usize, at: usize) -> f64 {
            if axis == strides.len() {
                return values[at];
            }
            let st = strides[axis];
            let wa = &w[axis];
            wa[0] * rec(values, strides, w, axis + 1, at)
                + wa[1] * rec(values, strides, w, axis + 1, at + st)
                + wa[2] * rec(values, strides, w, axis + 1, at + 2 * st)
        }
        rec(values, strides, &self.weights, 0, self.base)
    }
}

/// Ghost rule data for one band node.
#[derive(Clone, Debug, Serialize)]
pub struct BandPoint {
    pub index: usize,
    pub foot: Vec<f64>,
    pub normal: Vec<f64>,
    /// Normal and tangential offsets of the node from the foot point.
    pub d_node: f64,
    pub t_node: Vec<f64>,
    pub samples: [NormalSample; 2],
    /// Quadratic Lagrange weights at `d_node` on `0, s_1, s_2`.
    pub lagrange: [f64; 3],
}

/// A discretized domain with its coefficient cache.
pub struct GridDomain {
    grid: Arc<Grid>,
    rho_fn: DefiningFunction,
    rho: ScalarField,
    classes: Vec<PointClass>,
    band: Vec<BandPoint>,
    band_of: Vec<u32>,
    frame: Frame,
    op: MaOperator,
    centre: Vec<f64>,
    radius: f64,
}

impl std::fmt::Debug for GridDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridDomain")
            .field("rho", &self.rho_fn)
            .field("h", &self.grid.h())
            .field("interior", &self.op.len())
            .field("band", &self.band.len())
            .finish()
    }
}

const NONE: u32 = u32::MAX;

/// Discretize `{rho < 0}` on the grid covering `bbox` with spacing `h`,
/// using the frame of `structure` pivoted at the box centre.
pub fn grid_build(
    rho: &DefiningFunction,
    bbox: &BoundingBox,
    h: f64,
    structure: &AlmostComplexStructure,
) -> Result<GridDomain> {
    let metric = HermitianMetric::induced(structure);
    let frame = split_frame(structure, &metric, bbox, structure.frame_step(h))?;
    grid_build_with_frame(rho, bbox, h, &frame)
}

pub fn grid_build_with_frame(
    rho_fn: &DefiningFunction,
    bbox: &BoundingBox,
    h: f64,
    frame: &Frame,
) -> Result<GridDomain> {
    let n = frame.n();
    let grid = Arc::new(Grid::covering(n, bbox, h)?);
    let d = grid.dim();
    let rho = ScalarField::from_fn(grid.clone(), rho_fn);
    let rv = rho.values();
    if !rv.iter().any(|&r| r < 0.0) {
        return Err(Error::EmptyDomain);
    }

    let inner = |i: usize| grid.multi_index(i).iter().zip(grid.shape()).all(|(&k, &s)| k >= 1 && k + 1 < s);
    let interior: Vec<usize> = (0..grid.len()).filter(|&i| rv[i] < 0.0 && inner(i)).collect();
    if interior.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let op = MaOperator::new(grid.clone(), frame, interior.clone())?;
    let margin =
        par::map_range(op.len(), |k| op.a_at(rv, k).min_eigenvalue()).into_iter().fold(f64::INFINITY, f64::min);
    if !(margin > 0.0) {
        return Err(Error::NotStrictlyPsh { margin });
    }
    if (0..grid.len()).any(|i| rv[i] <= 0.0 && !inner(i)) {
        return Err(Error::InvalidInput(
            "box must contain the closed domain with a margin of at least one cell".into(),
        ));
    }

    let mut classes = vec![PointClass::Exterior; grid.len()];
    for &i in &interior {
        classes[i] = PointClass::Interior;
    }
    let neigh = op.offsets().neighbours();
    let mut band_idx = Vec::new();
    for &i in &interior {
        for &o in &neigh {
            let j = (i as isize + o) as usize;
            if classes[j] == PointClass::Exterior {
                classes[j] = PointClass::Band;
                band_idx.push(j);
            }
        }
    }
    band_idx.sort_unstable();

    let band = par::try_map_range(band_idx.len(), |k| band_point(rho_fn, &grid, &classes, band_idx[k]))?;
    let mut band_of = vec![NONE; grid.len()];
    for (k, b) in band.iter().enumerate() {
        band_of[b.index] = k as u32;
    }

    let mut centre = vec![0.0; d];
    for &i in &interior {
        for (c, x) in centre.iter_mut().zip(grid.point(i)) {
            *c += x;
        }
    }
    centre.iter_mut().for_each(|c| *c /= interior.len() as f64);
    let radius = band.iter().map(|b| dist(&b.foot, &centre)).fold(0.0, f64::max);

    Ok(GridDomain {
        grid,
        rho_fn: rho_fn.clone(),
        rho,
        classes,
        band,
        band_of,
        frame: frame.clone(),
        op,
        centre,
        radius,
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const TRANSVERSALITY: f64 = 1e-6;

fn band_point(rho: &DefiningFunction, grid: &Grid, classes: &[PointClass], index: usize) -> Result<BandPoint> {
    let h = grid.h();
    let b = grid.point(index);
    let g = rho.gradient(&b);
    let gn = norm(&g);
    if !(gn >= TRANSVERSALITY) {
        return Err(Error::TransversalityFailure { gradient: gn });
    }
    let dir: Vec<f64> = g.iter().map(|x| x / gn).collect();
    let along = |s: f64| -> Vec<f64> { b.iter().zip(&dir).map(|(x, v)| x - s * v).collect() };
    let r0 = rho.value(&b);
    let foot = if r0 <= 0.0 {
        b.clone()
    } else {
        let mut hi = 0.0;
        let mut found = false;
        for k in 1..=16 {
            hi = k as f64 * 0.5 * h;
            if rho.value(&along(hi)) < 0.0 {
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::InvalidInput(format!("no boundary crossing near band node {b:?}")));
        }
        let mut lo = 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if rho.value(&along(mid)) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        along(0.5 * (lo + hi))
    };
    let gf = rho.gradient(&foot);
    let gfn = norm(&gf);
    if !(gfn >= TRANSVERSALITY) {
        return Err(Error::TransversalityFailure { gradient: gfn });
    }
    let normal: Vec<f64> = gf.iter().map(|x| x / gfn).collect();
    let split = |p: &[f64]| -> (f64, Vec<f64>) {
        let off: Vec<f64> = p.iter().zip(&foot).map(|(x, f)| x - f).collect();
        let dn = dot(&off, &normal);
        let t = off.iter().zip(&normal).map(|(o, v)| o - dn * v).collect();
        (dn, t)
    };
    let (d_node, t_node) = split(&b);
    let sample = |m: f64| -> Option<NormalSample> {
        let s = -m * h;
        let p: Vec<f64> = foot.iter().zip(&normal).map(|(f, v)| f + s * v).collect();
        let d = grid.dim();
        let mut mi = vec![0usize; d];
        let mut weights = [[0.0; 3]; 4];
        for a in 0..d {
            let t = (p[a] - grid.lo()[a]) / h;
            let k = t.round();
            if k < 1.0 || k + 1.0 >= grid.shape()[a] as f64 {
                return None;
            }
            let x = t - k;
            weights[a] = [0.5 * x * (x - 1.0), 1.0 - x * x, 0.5 * x * (x + 1.0)];
            mi[a] = k as usize - 1;
        }
        let base = grid.flat_index(&mi);
        let strides = grid.strides();
        for c in 0..3usize.pow(d as u32) {
            let mut at = base;
            let mut r = c;
            for st in strides {
                at += (r % 3) * st;
                r /= 3;
            }
            if classes[at] != PointClass::Interior {
                return None;
            }
        }
        Some(NormalSample { s, base, weights })
    };
    let depths: Vec<f64> = (4..=20).map(|k| 0.5 * k as f64).collect();
    let mut found = None;
    'outer: for (i, &m1) in depths.iter().enumerate() {
        let Some(first) = sample(m1) else { continue };
        for &m2 in depths[i..].iter().filter(|&&m2| m2 >= m1 + 1.0) {
            if let Some(second) = sample(m2) {
                found = Some([first, second]);
                break 'outer;
            }
        }
    }
    let Some(samples) = found else {
        return Err(Error::InvalidInput(format!("no interior normal samples for band node {b:?}; grid too coarse")));
    };
    let (s1, s2) = (samples[0].s, samples[1].s);
    let x = d_node;
    let lagrange = [(x - s1) * (x - s2) / (s1 * s2), x * (x - s2) / (s1 * (s1 - s2)), x * (x - s1) / (s2 * (s2 - s1))];
    Ok(BandPoint { index, foot, normal, d_node, t_node, samples, lagrange })
}

impl GridDomain {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    pub fn defining_function(&self) -> &DefiningFunction {
        &self.rho_fn
    }

    /// `rho` sampled on every node.
    pub fn rho(&self) -> &ScalarField {
        &self.rho
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn structure(&self) -> &AlmostComplexStructure {
        self.frame.structure()
    }

    pub fn operator(&self) -> &MaOperator {
        &self.op
    }

    pub fn classes(&self) -> &[PointClass] {
        &self.classes
    }

    pub fn class(&self, idx: usize) -> PointClass {
        self.classes[idx]
    }

    /// Interior node indices, sorted; position `k` is unknown number `k`.
    pub fn interior(&self) -> &[usize] {
        self.op.nodes()
    }

    pub fn band(&self) -> &[BandPoint] {
        &self.band
    }

    pub fn band_position(&self, idx: usize) -> Option<usize> {
        let k = self.band_of[idx];
        (k != NONE).then_some(k as usize)
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.classes[idx] != PointClass::Exterior
    }

    /// Mean of the interior nodes.
    pub fn centre(&self) -> &[f64] {
        &self.centre
    }

    /// Largest distance from the centre to a boundary foot point.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Constants `c_b` of the ghost rules
    /// `u(b) = c_b + l_1 u(P_1) + l_2 u(P_2)` for boundary data `phi`.
    pub fn ghost_constants(&self, phi: &dyn PointFn) -> Vec<f64> {
        par::map_range(self.band.len(), |k| {
            let b = &self.band[k];
            let g = phi.gradient(&b.foot);
            b.lagrange[0] * phi.value(&b.foot) + dot(&b.t_node, &g)
        })
    }

    /// Overwrite band values from the ghost rules; interior values must be set.
    pub fn fill_band(&self, values: &mut [f64], consts: &[f64]) {
        let strides = self.grid.strides();
        for (b, c) in self.band.iter().zip(consts) {
            let [p1, p2] = &b.samples;
            values[b.index] = c + b.lagrange[1] * p1.eval(values, strides) + b.lagrange[2] * p2.eval(values, strides);
        }
    }

    /// Homogeneous ghost rules (all constants zero).
    pub fn fill_band_homogeneous(&self, values: &mut [f64]) {
        let strides = self.grid.strides();
        for b in &self.band {
            let [p1, p2] = &b.samples;
            values[b.index] = b.lagrange[1] * p1.eval(values, strides) + b.lagrange[2] * p2.eval(values, strides);
        }
    }

    /// Full-grid field with `interior` values and band values from the
    /// ghost rules; exterior nodes are `NaN`.
    pub fn assemble_field(&self, interior: &[f64], consts: &[f64]) -> ScalarField {
        let mut v = vec![f64::NAN; self.grid.len()];
        for (&i, &x) in self.interior().iter().zip(interior) {
            v[i] = x;
        }
        self.fill_band(&mut v, consts);
        ScalarField::new(self.grid.clone(), v).expect("grid-sized field")
    }

    /// Values of `u` at interior nodes.
    pub fn interior_values(&self, u: &ScalarField) -> Vec<f64> {
        self.interior().iter().map(|&i| u.get(i)).collect()
    }

    /// Boundary trace at each foot point: the quadratic in the normal
    /// coordinate through the band node and its two normal samples, at 0.
    pub fn boundary_trace(&self, u: &ScalarField) -> Vec<f64> {
        let strides = self.grid.strides();
        self.band
            .iter()
            .map(|b| {
                let [p1, p2] = &b.samples;
                let (x0, x1, x2) = (b.d_node, p1.s, p2.s);
                let (u0, u1, u2) = (u.get(b.index), p1.eval(u.values(), strides), p2.eval(u.values(), strides));
                u0 * x1 * x2 / ((x0 - x1) * (x0 - x2))
                    + u1 * x0 * x2 / ((x1 - x0) * (x1 - x2))
                    + u2 * x0 * x1 / ((x2 - x0) * (x2 - x1))
            })
            .collect()
    }

    /// Restrict a field to the active nodes (interior and band), `NaN` elsewhere.
    pub fn mask(&self, u: &ScalarField) -> ScalarField {
        let v = u
            .values()
            .iter()
            .zip(&self.classes)
            .map(|(&x, c)| if *c == PointClass::Exterior { f64::NAN } else { x })
            .collect();
        ScalarField::new(self.grid.clone(), v).expect("grid-sized field")
    }
}

/// `max 1 / lambda_min(A(rho))` over the interior nodes of `domain`.
pub fn m_rho(domain: &GridDomain, rho: &ScalarField) -> Result<f64> {
    let op = domain.operator();
    let rv = rho.values();
    let mins = par::map_range(op.len(), |k| op.a_at(rv, k).min_eigenvalue());
    let min = mins.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NotStrictlyPsh { margin: min });
    }
    Ok(1.0 / min)
}

/// Sub/supersolution pair `phi + A rho <= u <= phi - A rho`.
#[derive(Clone, Debug)]
pub struct BarrierPair {
    pub lower: ScalarField,
    pub upper: ScalarField,
    pub a: f64,
    /// Smallest admissible constant found before the safety margin.
    pub a_min: f64,
}

struct BarrierCheck {
    a_rho: Vec<HermitianMatrix>,
    a_phi: Vec<HermitianMatrix>,
    f_root: Vec<f64>,
}

impl BarrierCheck {
    fn ok(&self, a: f64) -> bool {
        let slack = 1e-12;
        self.a_rho.iter().zip(&self.a_phi).zip(&self.f_root).all(|((r, p), f)| {
            let r = r.scaled(a);
            let scale = slack * (1.0 + r.max_eigenvalue().abs() + p.max_eigenvalue().abs() + f);
            r.add(p).min_eigenvalue() >= f - scale && r.sub(p).min_eigenvalue() >= -scale
        })
    }
}

/// Smallest `A` with `A A(rho) + A(phi) >= f^{1/n}` and `A A(rho) >= A(phi)` at
/// every interior node, found by doubling then bisection, times 1.1 and
/// floored at `h`.
pub fn build_barriers(domain: &GridDomain, phi: &ScalarField, f: &ScalarField) -> Result<BarrierPair> {
    let op = domain.operator();
    let n = domain.n() as f64;
    let rv = domain.rho().values();
    let pv = phi.values();
    let a_rho = op.a_field(domain.rho());
    let min = a_rho.iter().map(HermitianMatrix::min_eigenvalue).fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NotStrictlyPsh { margin: min });
    }
    let check = BarrierCheck {
        a_rho,
        a_phi: op.a_field(phi),
        f_root: op.nodes().iter().map(|&i| f.get(i).max(0.0).powf(1.0 / n)).collect(),
    };
    let a_min = if check.ok(0.0) {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut doublings = 0;
        while !check.ok(hi) {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 200 {
                return Err(Error::InvalidInput("barrier constant search diverged".into()));
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if check.ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let a = (1.1 * a_min).max(domain.h());
    let lower: Vec<f64> = pv.iter().zip(rv).map(|(p, r)| p + a * r).collect();
    let upper: Vec<f64> = pv.iter().zip(rv).map(|(p, r)| p - a * r).collect();
    Ok(BarrierPair {
        lower: ScalarField::new(domain.grid().clone(), lower)?,
        upper: ScalarField::new(domain.grid().clone(), upper)?,
        a,
        a_min,
    })
}

/// Check the barrier inequalities for a given `A` (used by tests and reports).
pub fn barrier_conditions_hold(domain: &GridDomain, phi: &ScalarField, f: &ScalarField, a: f64) -> bool {
    let op = domain.operator();
    let n = domain.n() as f64;
    BarrierCheck {
        a_rho: op.a_field(domain.rho()),
        a_phi: op.a_field(phi),
        f_root: op.nodes().iter().map(|&i| f.get(i).max(0.0).powf(1.0 / n)).collect(),
    }
    .ok(a)
}

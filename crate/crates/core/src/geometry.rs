//! Almost complex structures on coordinate boxes, the induced hermitian
//! metric, orthonormal frames of T^{1,0} and bracket machinery.
//!
//! Coordinates are ordered `(x1, y1, x2, y2)`; the standard structure sends
//! `d/dx_k` to `d/dy_k`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub type CVector = DVector<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Axis-aligned box in R^{2n}.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        Self { lo, hi }
    }

    /// The cube `[-half, half]^dim`.
    pub fn cube(dim: usize, half: f64) -> Self {
        Self::new(vec![-half; dim], vec![half; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| *x >= *a && *x <= *b)
    }
}

/// Which family a structure belongs to.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructureFamily {
    Standard,
    Sheared { epsilon: f64 },
    Custom,
}

type MatrixFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

#[derive(Clone)]
enum Source {
    Standard,
    Sheared(f64),
    Closure(Arc<MatrixFn>),
    Table(Arc<StructureTable>),
}

/// A field of real `2n x 2n` matrices with `J^2 = -I`.
#[derive(Clone)]
pub struct AlmostComplexStructure {
    n: usize,
    source: Source,
    domain: Option<BoundingBox>,
}

impl fmt::Debug for AlmostComplexStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlmostComplexStructure").field("n", &self.n).field("family", &self.family()).finish()
    }
}

/// The standard structure on R^{2n}.
pub fn j_standard(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    j
}

/// Index of the entry that the shear `S = I + eps x1 E` perturbs.
fn shear_slot(n: usize) -> (usize, usize) {
    if n == 1 {
        (0, 1)
    } else {
        (0, 2)
    }
}

impl AlmostComplexStructure {
    pub fn standard(n: usize) -> Self {
        assert!(n == 1 || n == 2, "complex dimension must be 1 or 2");
        Self { n, source: Source::Standard, domain: None }
    }

    /// `S J_st S^{-1}` with `S = I + eps x1 E`, where `E` is the elementary
    /// matrix at (row 1, column 3) for n = 2 and (row 1, column 2) for n = 1.
    pub fn sheared(n: usize, epsilon: f64) -> Self {
        assert!(n == 1 || n == 2, "complex dimension must be 1 or 2");
        Self { n, source: Source::Sheared(epsilon), domain: None }
    }

    /// Structure given by a closure; `domain` bounds where it may be sampled.
    pub fn custom<F>(n: usize, f: F, domain: Option<BoundingBox>) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        assert!(n == 1 || n == 2, "complex dimension must be 1 or 2");
        Self { n, source: Source::Closure(Arc::new(f)), domain }
    }

    pub fn from_table(table: StructureTable) -> Self {
        let n = table.n;
        let domain = Some(table.bounding_box());
        Self { n, source: Source::Table(Arc::new(table)), domain }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn family(&self) -> StructureFamily {
        match self.source {
            Source::Standard => StructureFamily::Standard,
            Source::Sheared(epsilon) => StructureFamily::Sheared { epsilon },
            _ => StructureFamily::Custom,
        }
    }

    /// Region where the structure is defined, `None` when it is global.
    pub fn domain(&self) -> Option<&BoundingBox> {
        self.domain.as_ref()
    }

    /// Finite-difference step for frame derivatives: tiny for closed-form
    /// structures, the grid spacing for tabulated ones.
    pub fn frame_step(&self, h: f64) -> f64 {
        match self.source {
            Source::Table(_) => h,
            _ => ANALYTIC_FRAME_STEP,
        }
    }

    pub fn is_standard(&self) -> bool {
        match self.source {
            Source::Standard => true,
            Source::Sheared(e) => e == 0.0,
            _ => false,
        }
    }

    pub fn eval(&self, p: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(p.len(), self.dim());
        match &self.source {
            Source::Standard => j_standard(self.n),
            Source::Sheared(eps) => {
                let (r, c) = shear_slot(self.n);
                let s = eps * p[0];
                let mut sm: DMatrix<f64> = DMatrix::identity(self.dim(), self.dim());
                let mut si: DMatrix<f64> = DMatrix::identity(self.dim(), self.dim());
                sm[(r, c)] += s;
                si[(r, c)] -= s;
                &sm * j_standard(self.n) * &si
            }
            Source::Closure(f) => f(p),
            Source::Table(t) => t.eval(p),
        }
    }

    /// `(I + J^T J) / 2`, the Gram matrix of the induced metric at `p`.
    pub fn metric_matrix(&self, p: &[f64]) -> DMatrix<f64> {
        let j = self.eval(p);
        gram_from(&j)
    }
}

fn gram_from(j: &DMatrix<f64>) -> DMatrix<f64> {
    let d = j.nrows();
    (DMatrix::identity(d, d) + j.transpose() * j) * 0.5
}

/// Report of [`validate_structure`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StructureReport {
    pub max_defect: f64,
    pub samples: usize,
}

pub const STRUCTURE_TOLERANCE: f64 = 1e-10;

/// Frame-derivative step for closed-form structures.
pub const ANALYTIC_FRAME_STEP: f64 = 1e-5;

/// Check `J^2 = -I` at every sample point.
pub fn validate_structure(j: &AlmostComplexStructure, samples: &[Vec<f64>]) -> Result<StructureReport> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no sample points".into()));
    }
    let d = j.dim();
    let mut max_defect: f64 = 0.0;
    for p in samples {
        if p.len() != d {
            return Err(Error::InvalidInput(format!("sample has dimension {}, expected {d}", p.len())));
        }
        if let Some(b) = j.domain() {
            if !b.contains(p) {
                return Err(Error::InvalidInput(format!("sample {p:?} outside the structure's box")));
            }
        }
        let m = j.eval(p);
        let det = m.clone().determinant();
        let defect = (&m * &m + DMatrix::identity(d, d)).amax();
        if !det.is_finite() || det.abs() < 1e-12 {
            return Err(Error::InvalidStructure {
                max_defect: max_defect.max(defect),
                reason: format!("singular matrix at {p:?}"),
            });
        }
        max_defect = max_defect.max(defect);
    }
    if max_defect > STRUCTURE_TOLERANCE {
        return Err(Error::InvalidStructure { max_defect, reason: "J^2 != -I".into() });
    }
    Ok(StructureReport { max_defect, samples: samples.len() })
}

/// Coefficient table for a custom structure on a tensor grid.
///
/// Entries are interpolated multilinearly and then projected back onto
/// `J^2 = -I` by the iteration `X <- (X - X^{-1}) / 2`.
#[derive(Clone, Debug)]
pub struct StructureTable {
    n: usize,
    axes: Vec<Vec<f64>>,
    values: Vec<DMatrix<f64>>,
}

impl StructureTable {
    /// Build from rows `(point, matrix)`; the points must form a full tensor grid.
    pub fn new(n: usize, rows: Vec<(Vec<f64>, DMatrix<f64>)>) -> Result<Self> {
        let d = 2 * n;
        if rows.is_empty() {
            return Err(Error::InvalidInput("empty structure table".into()));
        }
        let mut axes: Vec<Vec<f64>> = vec![Vec::new(); d];
        for (p, m) in &rows {
            if p.len() != d || m.nrows() != d || m.ncols() != d {
                return Err(Error::InvalidInput("structure table row has wrong dimension".into()));
            }
            for a in 0..d {
                axes[a].push(p[a]);
            }
        }
        for ax in axes.iter_mut() {
            ax.sort_by(f64::total_cmp);
            ax.dedup();
            if ax.len() < 2 {
                return Err(Error::InvalidInput("structure table needs two nodes per axis".into()));
            }
        }
        let total: usize = axes.iter().map(Vec::len).product();
        if total != rows.len() {
            return Err(Error::InvalidInput(format!(
                "structure table has {} rows, tensor grid needs {total}",
                rows.len()
            )));
        }
        let mut values = vec![DMatrix::zeros(d, d); total];
        let mut seen = vec![false; total];
        for (p, m) in rows {
            let mut idx = 0;
            for a in 0..d {
                let k = axes[a].binary_search_by(|x| x.total_cmp(&p[a])).expect("axis node");
                idx = idx * axes[a].len() + k;
            }
            if seen[idx] {
                return Err(Error::InvalidInput(format!("duplicate structure table node {p:?}")));
            }
            seen[idx] = true;
            values[idx] = m;
        }
        Ok(Self { n, axes, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox::new(
            self.axes.iter().map(|a| a[0]).collect(),
            self.axes.iter().map(|a| *a.last().unwrap()).collect(),
        )
    }

    fn eval(&self, p: &[f64]) -> DMatrix<f64> {
        let d = 2 * self.n;
        let mut cell = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let ax = &self.axes[a];
            let x = p[a].clamp(ax[0], *ax.last().unwrap());
            let k = match ax.binary_search_by(|v| v.total_cmp(&x)) {
                Ok(k) => k.min(ax.len() - 2),
                Err(k) => k.saturating_sub(1).min(ax.len() - 2),
            };
            cell[a] = k;
            frac[a] = (x - ax[k]) / (ax[k + 1] - ax[k]);
        }
        let mut out = DMatrix::zeros(d, d);
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = 0;
            for a in 0..d {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                idx = idx * self.axes[a].len() + cell[a] + bit;
            }
            if w != 0.0 {
                out += &self.values[idx] * w;
            }
        }
        project_to_complex_structure(out)
    }
}

/// Nearest-structure projection by `X <- (X - X^{-1}) / 2`; returns the
/// input unchanged if it is singular.
pub fn project_to_complex_structure(mut x: DMatrix<f64>) -> DMatrix<f64> {
    let d = x.nrows();
    for _ in 0..60 {
        let defect = (&x * &x + DMatrix::identity(d, d)).amax();
        if defect < 1e-14 {
            break;
        }
        let Some(inv) = x.clone().try_inverse() else { break };
        x = (&x - inv) * 0.5;
    }
    x
}

/// Hermitian metric induced by `J`: `g(X, Y) = X^T G Y` with
/// `G = (I + J^T J) / 2`, and `omega(X, Y) = g(X, J Y)` so that
/// `g(X, Y) = -omega(X, J Y)`.
#[derive(Clone, Debug)]
pub struct HermitianMetric {
    structure: AlmostComplexStructure,
}

impl HermitianMetric {
    pub fn induced(structure: &AlmostComplexStructure) -> Self {
        Self { structure: structure.clone() }
    }

    pub fn structure(&self) -> &AlmostComplexStructure {
        &self.structure
    }

    pub fn g(&self, p: &[f64], x: &[f64], y: &[f64]) -> f64 {
        let gm = self.structure.metric_matrix(p);
        bilinear(&gm, x, y)
    }

    pub fn omega(&self, p: &[f64], x: &[f64], y: &[f64]) -> f64 {
        let j = self.structure.eval(p);
        let gm = gram_from(&j);
        let jy: Vec<f64> = (&j * DVector::from_column_slice(y)).iter().copied().collect();
        bilinear(&gm, x, &jy)
    }

    /// `2 i omega(zeta, conj(eta))` extended complex-bilinearly; equals one
    /// on `d/dz_p` for the standard structure.
    pub fn hermitian(&self, p: &[f64], zeta: &CVector, eta: &CVector) -> Complex64 {
        let j = self.structure.eval(p);
        let gm = gram_from(&j).map(|v| Complex64::new(v, 0.0));
        let jc = j.map(|v| Complex64::new(v, 0.0));
        let eta_bar = eta.map(|v| v.conj());
        let w = &jc * eta_bar;
        let om = (zeta.transpose() * gm * w)[(0, 0)];
        2.0 * I * om
    }
}

fn bilinear(m: &DMatrix<f64>, x: &[f64], y: &[f64]) -> f64 {
    let d = x.len();
    let mut s = 0.0;
    for a in 0..d {
        for b in 0..d {
            s += x[a] * m[(a, b)] * y[b];
        }
    }
    s
}

fn real_times_complex(m: &DMatrix<f64>, v: &CVector) -> CVector {
    let d = v.len();
    CVector::from_fn(d, |r, _| {
        let mut s = Complex64::new(0.0, 0.0);
        for c in 0..d {
            s += v[c] * m[(r, c)];
        }
        s
    })
}

/// `Pi^{0,1} X = (X + i J X) / 2`.
pub fn project_01(j: &DMatrix<f64>, x: &CVector) -> CVector {
    (x + real_times_complex(j, x) * I) * Complex64::new(0.5, 0.0)
}

/// `Pi^{1,0} X = (X - i J X) / 2`.
pub fn project_10(j: &DMatrix<f64>, x: &CVector) -> CVector {
    (x - real_times_complex(j, x) * I) * Complex64::new(0.5, 0.0)
}

/// Lie bracket of two complex vector fields from their values and first
/// derivatives: `dx[a]` is `d X / d x_a`.
pub fn lie_bracket(x: &CVector, dx: &[CVector], y: &CVector, dy: &[CVector]) -> CVector {
    let d = x.len();
    let mut out = CVector::zeros(d);
    for a in 0..d {
        out += &dy[a] * x[a] - &dx[a] * y[a];
    }
    out
}

/// Frame values at a point.
#[derive(Clone, Debug)]
pub struct FrameBasis {
    pub j: DMatrix<f64>,
    /// g-orthonormal real vectors `e_p`, with `J e_p` orthogonal to every `e_q`.
    pub e: Vec<DVector<f64>>,
    pub zeta: Vec<CVector>,
}

/// Frame values and first derivatives at a point: `dzeta[p][a] = d zeta_p / d x_a`.
#[derive(Clone, Debug)]
pub struct FrameJet {
    pub j: DMatrix<f64>,
    pub zeta: Vec<CVector>,
    pub dzeta: Vec<Vec<CVector>>,
}

impl FrameJet {
    pub fn zeta_bar(&self, p: usize) -> CVector {
        self.zeta[p].map(|v| v.conj())
    }

    pub fn dzeta_bar(&self, p: usize) -> Vec<CVector> {
        self.dzeta[p].iter().map(|v| v.map(|c| c.conj())).collect()
    }

    /// `[zeta_p, conj(zeta_q)]`.
    pub fn bracket(&self, p: usize, q: usize) -> CVector {
        lie_bracket(&self.zeta[p], &self.dzeta[p], &self.zeta_bar(q), &self.dzeta_bar(q))
    }

    /// `Pi^{0,1} [zeta_p, conj(zeta_q)]`.
    pub fn bracket_01(&self, p: usize, q: usize) -> CVector {
        project_01(&self.j, &self.bracket(p, q))
    }

    /// `Pi^{1,0} [conj(zeta_p), conj(zeta_q)]`.
    pub fn bracket_bar_10(&self, p: usize, q: usize) -> CVector {
        let b = lie_bracket(&self.zeta_bar(p), &self.dzeta_bar(p), &self.zeta_bar(q), &self.dzeta_bar(q));
        project_10(&self.j, &b)
    }
}

/// Orthonormal frame `zeta_p = (e_p - i J e_p) / 2` of T^{1,0}.
///
/// The `e_p` come from Gram-Schmidt in the induced metric applied to
/// coordinate seed vectors; each step removes both `e_k` and `J e_k`. The
/// seed order is fixed once, so the frame is smooth wherever the pivots stay
/// away from zero.
#[derive(Clone, Debug)]
pub struct Frame {
    structure: AlmostComplexStructure,
    seeds: Vec<usize>,
    step: f64,
}

pub const PIVOT_THRESHOLD: f64 = 1e-8;

fn gram_schmidt(j: &DMatrix<f64>, seeds: &[usize]) -> std::result::Result<Vec<DVector<f64>>, f64> {
    let d = j.nrows();
    let gm = gram_from(j);
    let gdot = |x: &DVector<f64>, y: &DVector<f64>| (x.transpose() * &gm * y)[(0, 0)];
    let mut es: Vec<DVector<f64>> = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let mut v = DVector::zeros(d);
        v[s] = 1.0;
        for e in &es {
            let je = j * e;
            let c1 = gdot(e, &v);
            let c2 = gdot(&je, &v);
            v -= e * c1 + je * c2;
        }
        let norm = gdot(&v, &v).max(0.0).sqrt();
        if norm < PIVOT_THRESHOLD {
            return Err(norm);
        }
        es.push(v / norm);
    }
    Ok(es)
}

/// Seed order chosen by pivoting at `p`: at each step take the coordinate
/// vector with the largest residual (ties to the lowest index).
pub fn pivot_seeds(j: &DMatrix<f64>) -> Result<Vec<usize>> {
    let d = j.nrows();
    let n = d / 2;
    let gm = gram_from(j);
    let gdot = |x: &DVector<f64>, y: &DVector<f64>| (x.transpose() * &gm * y)[(0, 0)];
    let mut seeds = Vec::with_capacity(n);
    let mut es: Vec<DVector<f64>> = Vec::new();
    for _ in 0..n {
        let mut best: Option<(usize, f64)> = None;
        for s in 0..d {
            if seeds.contains(&s) {
                continue;
            }
            let mut v = DVector::zeros(d);
            v[s] = 1.0;
            for e in &es {
                let je = j * e;
                let c1 = gdot(e, &v);
                let c2 = gdot(&je, &v);
                v -= e * c1 + je * c2;
            }
            let r = gdot(&v, &v).max(0.0).sqrt();
            if best.is_none_or(|(_, b)| r > b + 1e-12) {
                best = Some((s, r));
            }
        }
        let (s, r) = best.expect("candidate seed");
        if r < PIVOT_THRESHOLD {
            return Err(Error::DegenerateFrame { pivot: r });
        }
        let mut v = DVector::zeros(d);
        v[s] = 1.0;
        for e in &es {
            let je = j * e;
            let c1 = gdot(e, &v);
            let c2 = gdot(&je, &v);
            v -= e * c1 + je * c2;
        }
        es.push(v / r);
        seeds.push(s);
    }
    Ok(seeds)
}

/// Build the frame for `structure` on `region`, pivoting at the region's centre.
pub fn split_frame(
    structure: &AlmostComplexStructure,
    metric: &HermitianMetric,
    region: &BoundingBox,
    step: f64,
) -> Result<Frame> {
    debug_assert_eq!(metric.structure().dim(), structure.dim());
    let c = region.center();
    let seeds = pivot_seeds(&structure.eval(&c))?;
    Frame::with_seeds(structure, seeds, step)
}

impl Frame {
    /// Frame with an explicit seed order. `step` is the finite-difference
    /// spacing for frame derivatives.
    pub fn with_seeds(structure: &AlmostComplexStructure, seeds: Vec<usize>, step: f64) -> Result<Self> {
        let n = structure.n();
        if seeds.len() != n || seeds.iter().any(|&s| s >= 2 * n) {
            return Err(Error::InvalidInput(format!("bad seed order {seeds:?}")));
        }
        if !(step > 0.0) {
            return Err(Error::InvalidInput("frame step must be positive".into()));
        }
        Ok(Self { structure: structure.clone(), seeds, step })
    }

    pub fn structure(&self) -> &AlmostComplexStructure {
        &self.structure
    }

    pub fn metric(&self) -> HermitianMetric {
        HermitianMetric::induced(&self.structure)
    }

    pub fn n(&self) -> usize {
        self.structure.n()
    }

    pub fn seeds(&self) -> &[usize] {
        &self.seeds
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn with_step(&self, step: f64) -> Self {
        Self { step, ..self.clone() }
    }

    pub fn basis(&self, p: &[f64]) -> Result<FrameBasis> {
        let j = self.structure.eval(p);
        let e = gram_schmidt(&j, &self.seeds).map_err(|pivot| Error::DegenerateFrame { pivot })?;
        let zeta = e
            .iter()
            .map(|ev| {
                let je = &j * ev;
                CVector::from_fn(ev.len(), |r, _| Complex64::new(0.5 * ev[r], -0.5 * je[r]))
            })
            .collect();
        Ok(FrameBasis { j, e, zeta })
    }

    /// Values and central-difference derivatives, one-sided (three point)
    /// where the structure's box cuts the stencil.
    pub fn jet(&self, p: &[f64]) -> Result<FrameJet> {
        let d = self.structure.dim();
        let n = self.n();
        let dom = self.structure.domain();
        if let Some(b) = dom {
            if !b.contains(p) {
                return Err(Error::StencilOutOfDomain { point: p.to_vec() });
            }
        }
        let base = self.basis(p)?;
        let s = self.step;
        let mut dzeta = vec![vec![CVector::zeros(d); d]; n];
        let mut q = p.to_vec();
        let at = |q: &[f64]| -> Result<Vec<CVector>> { Ok(self.basis(q)?.zeta) };
        for a in 0..d {
            let fits = |x: f64| dom.is_none_or(|b| x >= b.lo[a] && x <= b.hi[a]);
            let (plus, minus) = (fits(p[a] + s), fits(p[a] - s));
            let deriv: Vec<CVector> = if plus && minus {
                q[a] = p[a] + s;
                let zp = at(&q)?;
                q[a] = p[a] - s;
                let zm = at(&q)?;
                zp.iter().zip(&zm).map(|(x, y)| (x - y) / Complex64::new(2.0 * s, 0.0)).collect()
            } else {
                let sign = if plus { 1.0 } else { -1.0 };
                if !fits(p[a] + 2.0 * sign * s) {
                    return Err(Error::StencilOutOfDomain { point: p.to_vec() });
                }
                q[a] = p[a] + sign * s;
                let z1 = at(&q)?;
                q[a] = p[a] + 2.0 * sign * s;
                let z2 = at(&q)?;
                (0..n)
                    .map(|k| {
                        (&base.zeta[k] * Complex64::new(-3.0, 0.0) + &z1[k] * Complex64::new(4.0, 0.0) - &z2[k])
                            / Complex64::new(2.0 * sign * s, 0.0)
                    })
                    .collect()
            };
            q[a] = p[a];
            for k in 0..n {
                dzeta[k][a] = deriv[k].clone();
            }
        }
        Ok(FrameJet { j: base.j, zeta: base.zeta, dzeta })
    }
}

/// `Pi^{0,1}([zeta_p, conj(zeta_q)])` at `point`.
pub fn bracket_01(frame: &Frame, p: usize, q: usize, point: &[f64]) -> Result<CVector> {
    check_indices(frame, p, q)?;
    Ok(frame.jet(point)?.bracket_01(p, q))
}

fn check_indices(frame: &Frame, p: usize, q: usize) -> Result<()> {
    if p >= frame.n() || q >= frame.n() {
        return Err(Error::InvalidInput(format!("frame index out of range ({p}, {q})")));
    }
    Ok(())
}

/// Largest `|Pi^{1,0} [conj(zeta_p), conj(zeta_q)]|` over samples and pairs
/// `p < q`; zero exactly when the structure is integrable. Always zero for
/// n = 1.
pub fn integrability_defect(frame: &Frame, samples: &[Vec<f64>]) -> Result<f64> {
    let n = frame.n();
    let mut worst: f64 = 0.0;
    for pt in samples {
        let jet = frame.jet(pt)?;
        for p in 0..n {
            for q in (p + 1)..n {
                worst = worst.max(jet.bracket_bar_10(p, q).norm());
            }
        }
    }
    Ok(worst)
}

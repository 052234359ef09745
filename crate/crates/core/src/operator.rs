//! The bracket-corrected complex Hessian `A_{p qbar}(u)`, its determinant,
//! the linearization of `log det A`, and psh classification.
//!
//! In an orthonormal frame
//! `A_{p qbar} = zeta_p conj(zeta_q) u - (Pi^{0,1}[zeta_p, conj(zeta_q)]) u`,
//! which expands into coordinate second derivatives plus first-order terms
//! from the differentiated frame. The expansion coefficients do not depend on
//! `u`, so they are computed once per grid point.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Grid, PointFn, ScalarField};
use crate::geometry::{Frame, FrameJet};
use crate::linalg::HermitianMatrix;
use crate::par;

/// Upper bound on the number of derivative terms (`d(d+1)/2 + d` for d = 4).
pub const MAX_TERMS: usize = 14;
/// Upper bound on real channels of a Hermitian `n x n` matrix (n = 2).
pub const MAX_CHANNELS: usize = 4;

pub type Terms = [f64; MAX_TERMS];

pub fn term_count(d: usize) -> usize {
    d * (d + 1) / 2 + d
}

pub fn channel_count(n: usize) -> usize {
    n * n
}

/// Second-derivative index pairs `(a, b)`, `a <= b`, in term order.
pub fn second_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for a in 0..d {
        for b in a..d {
            out.push((a, b));
        }
    }
    out
}

/// Real coefficients expressing each channel of `A` as a combination of the
/// derivative terms `[u_ab (a <= b)..., u_a...]`.
///
/// Channels are `A_11`, `A_22`, `Re A_12`, `Im A_12` (only the first for n = 1).
#[derive(Clone, Copy, Debug)]
pub struct PointCoefficients {
    pub n: usize,
    pub d: usize,
    pub c: [[f64; MAX_TERMS]; MAX_CHANNELS],
}

fn channel_pq(n: usize) -> Vec<(usize, usize)> {
    if n == 1 {
        vec![(0, 0)]
    } else {
        vec![(0, 0), (1, 1), (0, 1)]
    }
}

/// Complex term coefficients of the unsymmetrized `A_{p qbar}`.
fn raw_coefficients(jet: &FrameJet, p: usize, q: usize) -> Vec<Complex64> {
    let d = jet.j.nrows();
    let zp = &jet.zeta[p];
    let zq_bar = jet.zeta_bar(q);
    let dzq_bar = jet.dzeta_bar(q);
    let b01 = jet.bracket_01(p, q);
    let mut out = Vec::with_capacity(term_count(d));
    for (a, b) in second_pairs(d) {
        if a == b {
            out.push(zp[a] * zq_bar[a]);
        } else {
            out.push(zp[a] * zq_bar[b] + zp[b] * zq_bar[a]);
        }
    }
    for b in 0..d {
        let mut s = -b01[b];
        for a in 0..d {
            s += zp[a] * dzq_bar[a][b];
        }
        out.push(s);
    }
    out
}

/// Coefficients at one point from the frame jet, after Hermitian
/// symmetrization `A <- (A + A^*) / 2`.
pub fn point_coefficients(jet: &FrameJet) -> PointCoefficients {
    let n = jet.zeta.len();
    let d = jet.j.nrows();
    let nt = term_count(d);
    let mut c = [[0.0; MAX_TERMS]; MAX_CHANNELS];
    for (p, q) in channel_pq(n) {
        let x = raw_coefficients(jet, p, q);
        let y = raw_coefficients(jet, q, p);
        let sym: Vec<Complex64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b.conj())).collect();
        if p == q {
            for k in 0..nt {
                c[p][k] = sym[k].re;
            }
        } else {
            for k in 0..nt {
                c[2][k] = sym[k].re;
                c[3][k] = sym[k].im;
            }
        }
    }
    PointCoefficients { n, d, c }
}

impl PointCoefficients {
    pub fn channels(&self, terms: &Terms) -> [f64; MAX_CHANNELS] {
        let nt = term_count(self.d);
        let mut out = [0.0; MAX_CHANNELS];
        for ch in 0..channel_count(self.n) {
            out[ch] = (0..nt).map(|k| self.c[ch][k] * terms[k]).sum();
        }
        out
    }

    pub fn assemble(&self, terms: &Terms) -> HermitianMatrix {
        let ch = self.channels(terms);
        channels_to_matrix(self.n, &ch)
    }

    /// `sum_c w_c * coefficients_c`.
    pub fn combine(&self, w: &[f64; MAX_CHANNELS]) -> Terms {
        let mut out = [0.0; MAX_TERMS];
        for ch in 0..channel_count(self.n) {
            for k in 0..term_count(self.d) {
                out[k] += w[ch] * self.c[ch][k];
            }
        }
        out
    }
}

pub fn channels_to_matrix(n: usize, ch: &[f64; MAX_CHANNELS]) -> HermitianMatrix {
    if n == 1 {
        HermitianMatrix::scalar(1, ch[0])
    } else {
        HermitianMatrix::from_parts(2, [ch[0], ch[1]], Complex64::new(ch[2], ch[3]))
    }
}

/// Channel weights `w` with `tr(B A(w)) = sum_c w_c A_c(w)` for Hermitian `B`.
pub fn trace_weights(b: &HermitianMatrix) -> [f64; MAX_CHANNELS] {
    let [d0, d1] = b.diagonal();
    if b.dim() == 1 {
        return [d0, 0.0, 0.0, 0.0];
    }
    let off = b.off_diagonal();
    [d0, d1, 2.0 * off.re, 2.0 * off.im]
}

/// Flat-index offsets of the second-order stencil on a grid.
#[derive(Clone, Debug)]
pub struct StencilOffsets {
    d: usize,
    h: f64,
    unit: Vec<isize>,
    mixed: Vec<[isize; 4]>,
}

impl StencilOffsets {
    pub fn new(grid: &Grid) -> Self {
        let d = grid.dim();
        let unit: Vec<isize> = grid.strides().iter().map(|&s| s as isize).collect();
        let mut mixed = Vec::new();
        for (a, b) in second_pairs(d) {
            if a != b {
                mixed.push([unit[a] + unit[b], unit[a] - unit[b], -unit[a] + unit[b], -unit[a] - unit[b]]);
            }
        }
        Self { d, h: grid.h(), unit, mixed }
    }

    /// All non-centre offsets of the stencil.
    pub fn neighbours(&self) -> Vec<isize> {
        let mut out = Vec::new();
        for &u in &self.unit {
            out.push(u);
            out.push(-u);
        }
        for m in &self.mixed {
            out.extend_from_slice(m);
        }
        out
    }

    /// Derivative terms at `idx`; the caller guarantees the stencil fits.
    #[inline]
    pub fn terms(&self, v: &[f64], idx: usize) -> Terms {
        let d = self.d;
        let h2 = self.h * self.h;
        let i = idx as isize;
        let at = |o: isize| v[(i + o) as usize];
        let u0 = v[idx];
        let mut t = [0.0; MAX_TERMS];
        let mut k = 0;
        let mut m = 0;
        for a in 0..d {
            for b in a..d {
                t[k] = if a == b {
                    (at(self.unit[a]) - 2.0 * u0 + at(-self.unit[a])) / h2
                } else {
                    let o = &self.mixed[m];
                    m += 1;
                    (at(o[0]) - at(o[1]) - at(o[2]) + at(o[3])) / (4.0 * h2)
                };
                k += 1;
            }
        }
        for a in 0..d {
            t[k + a] = (at(self.unit[a]) - at(-self.unit[a])) / (2.0 * self.h);
        }
        t
    }

    /// Centre weight of a combined stencil (for Jacobi preconditioning).
    pub fn centre_weight(&self, comb: &Terms) -> f64 {
        let mut k = 0;
        let mut s = 0.0;
        for a in 0..self.d {
            for b in a..self.d {
                if a == b {
                    s -= 2.0 * comb[k] / (self.h * self.h);
                }
                k += 1;
            }
        }
        s
    }
}

/// Derivative terms of a point function by the same stencil with spacing `h`.
pub fn terms_of_fn(u: &dyn PointFn, p: &[f64], h: f64) -> Terms {
    let d = p.len();
    let mut q = p.to_vec();
    let val = |q: &mut Vec<f64>, off: &[(usize, f64)]| {
        for &(a, s) in off {
            q[a] = p[a] + s * h;
        }
        let v = u.value(q);
        for &(a, _) in off {
            q[a] = p[a];
        }
        v
    };
    let u0 = u.value(p);
    let mut t = [0.0; MAX_TERMS];
    let mut k = 0;
    for a in 0..d {
        for b in a..d {
            t[k] = if a == b {
                (val(&mut q, &[(a, 1.0)]) - 2.0 * u0 + val(&mut q, &[(a, -1.0)])) / (h * h)
            } else {
                (val(&mut q, &[(a, 1.0), (b, 1.0)])
                    - val(&mut q, &[(a, 1.0), (b, -1.0)])
                    - val(&mut q, &[(a, -1.0), (b, 1.0)])
                    + val(&mut q, &[(a, -1.0), (b, -1.0)]))
                    / (4.0 * h * h)
            };
            k += 1;
        }
    }
    for a in 0..d {
        t[k + a] = (val(&mut q, &[(a, 1.0)]) - val(&mut q, &[(a, -1.0)])) / (2.0 * h);
    }
    t
}

fn full_stencil_fits(grid: &Grid, idx: usize) -> bool {
    grid.multi_index(idx).iter().zip(grid.shape()).all(|(&k, &s)| k >= 1 && k + 1 < s)
}

/// `A(u)` at grid node `idx`, with frame derivatives computed on the fly.
pub fn a_matrix(u: &ScalarField, frame: &Frame, idx: usize) -> Result<HermitianMatrix> {
    let grid = u.grid();
    let p = grid.point(idx);
    if !full_stencil_fits(grid, idx) {
        return Err(Error::StencilOutOfDomain { point: p });
    }
    let off = StencilOffsets::new(grid);
    let t = off.terms(u.values(), idx);
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::StencilOutOfDomain { point: p });
    }
    let jet = frame.jet(&p)?;
    Ok(point_coefficients(&jet).assemble(&t))
}

/// `A(u)` at an arbitrary point for a closed-form `u`, using stencil spacing `h`.
pub fn a_matrix_fn(u: &dyn PointFn, frame: &Frame, p: &[f64], h: f64) -> Result<HermitianMatrix> {
    let jet = frame.jet(p)?;
    Ok(point_coefficients(&jet).assemble(&terms_of_fn(u, p, h)))
}

/// Per-point coefficient cache over a fixed set of interior grid nodes.
#[derive(Clone, Debug)]
pub struct MaOperator {
    n: usize,
    grid: Arc<Grid>,
    offsets: StencilOffsets,
    nodes: Vec<usize>,
    coeffs: Vec<PointCoefficients>,
}

impl MaOperator {
    /// Build the cache for `nodes`, which must all have a full stencil.
    pub fn new(grid: Arc<Grid>, frame: &Frame, nodes: Vec<usize>) -> Result<Self> {
        for &i in &nodes {
            if !full_stencil_fits(&grid, i) {
                return Err(Error::StencilOutOfDomain { point: grid.point(i) });
            }
        }
        let coeffs = par::try_map_range(nodes.len(), |k| {
            let jet = frame.jet(&grid.point(nodes[k]))?;
            Ok::<_, Error>(point_coefficients(&jet))
        })?;
        Ok(Self { n: frame.n(), offsets: StencilOffsets::new(&grid), grid, nodes, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn offsets(&self) -> &StencilOffsets {
        &self.offsets
    }

    /// Grid indices of the operator's nodes, in unknown order.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn coefficients(&self, pos: usize) -> &PointCoefficients {
        &self.coeffs[pos]
    }

    pub fn terms(&self, values: &[f64], pos: usize) -> Terms {
        self.offsets.terms(values, self.nodes[pos])
    }

    /// `A(u)` at node `pos` from full-grid values.
    pub fn a_at(&self, values: &[f64], pos: usize) -> HermitianMatrix {
        self.coeffs[pos].assemble(&self.terms(values, pos))
    }

    pub fn a_field(&self, u: &ScalarField) -> Vec<HermitianMatrix> {
        let v = u.values();
        par::map_range(self.len(), |k| self.a_at(v, k))
    }

    /// Position of the operator node with grid index `idx`.
    pub fn position(&self, idx: usize) -> Option<usize> {
        self.nodes.binary_search(&idx).ok()
    }
}

/// Per-point `det A(u) - f` with norms.
#[derive(Clone, Debug, Serialize)]
pub struct EquationResidual {
    #[serde(skip)]
    pub values: Vec<f64>,
    pub max: f64,
    pub l2: f64,
    pub worst_point: Vec<f64>,
}

/// Residual of `det A(u) = f` over the operator's nodes. `f` is read at the
/// same nodes.
pub fn ma_residual(u: &ScalarField, f: &ScalarField, op: &MaOperator) -> EquationResidual {
    let uv = u.values();
    let fv = f.values();
    let values = par::map_range(op.len(), |k| op.a_at(uv, k).det() - fv[op.nodes()[k]]);
    let (mut max, mut sq, mut worst) = (0.0f64, 0.0, 0usize);
    for (k, r) in values.iter().enumerate() {
        if r.abs() > max {
            max = r.abs();
            worst = k;
        }
        sq += r * r;
    }
    let l2 = (sq * op.grid().h().powi(op.grid().dim() as i32)).sqrt();
    let worst_point = if values.is_empty() { Vec::new() } else { op.grid().point(op.nodes()[worst]) };
    EquationResidual { values, max, l2, worst_point }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PshVerdict {
    StrictlyPsh,
    Psh,
    NotPsh,
}

#[derive(Clone, Debug, Serialize)]
pub struct PshReport {
    pub margin: f64,
    pub tolerance: f64,
    pub verdict: PshVerdict,
    pub worst_point: Vec<f64>,
}

/// Tolerance for psh verdicts: `1e-8 max(1, |u|) + h^2 max |D^2 u|`.
pub fn psh_tolerance(u: &ScalarField, op: &MaOperator) -> f64 {
    let v = u.values();
    let nsec = op.grid().dim() * (op.grid().dim() + 1) / 2;
    let d2max = par::map_range(op.len(), |k| {
        let t = op.terms(v, k);
        t[..nsec].iter().fold(0.0f64, |m, x| m.max(x.abs()))
    })
    .into_iter()
    .fold(0.0, f64::max);
    let h = op.grid().h();
    1e-8 * u.max_abs().max(1.0) + h * h * d2max
}

/// Smallest eigenvalue of `A(u)` over `positions` (all nodes when `None`).
pub fn psh_classify(u: &ScalarField, op: &MaOperator, positions: Option<&[usize]>) -> PshReport {
    let tol = psh_tolerance(u, op);
    psh_classify_with_tolerance(u, op, positions, tol)
}

pub fn psh_classify_with_tolerance(
    u: &ScalarField,
    op: &MaOperator,
    positions: Option<&[usize]>,
    tolerance: f64,
) -> PshReport {
    let v = u.values();
    let all: Vec<usize>;
    let pos = match positions {
        Some(p) => p,
        None => {
            all = (0..op.len()).collect();
            &all
        }
    };
    let mins = par::map_range(pos.len(), |k| op.a_at(v, pos[k]).min_eigenvalue());
    let (mut margin, mut worst) = (f64::INFINITY, 0usize);
    for (k, m) in mins.iter().enumerate() {
        if *m < margin {
            margin = *m;
            worst = pos[k];
        }
    }
    let verdict = if margin > tolerance {
        PshVerdict::StrictlyPsh
    } else if margin >= -tolerance {
        PshVerdict::Psh
    } else {
        PshVerdict::NotPsh
    };
    let worst_point = if pos.is_empty() { Vec::new() } else { op.grid().point(op.nodes()[worst]) };
    PshReport { margin, tolerance, verdict, worst_point }
}

/// `L w = tr(A(u)^{-1} A(w))` at node `pos`.
pub fn linearized_apply(u: &ScalarField, w: &ScalarField, op: &MaOperator, pos: usize) -> Result<f64> {
    let a = op.a_at(u.values(), pos);
    let min = a.min_eigenvalue();
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    let b = a.inverse().ok_or(Error::NotPositiveDefinite { min_eigenvalue: min })?;
    Ok(b.trace_product(&op.a_at(w.values(), pos)))
}

/// Eigenvalues of `A(u)` at every node, for export.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumRow {
    pub point: Vec<f64>,
    pub eigenvalues: Vec<f64>,
}

pub fn spectra(u: &ScalarField, op: &MaOperator) -> Vec<SpectrumRow> {
    let v = u.values();
    let n = op.n();
    par::map_range(op.len(), |k| {
        let ev = op.a_at(v, k).eigenvalues();
        SpectrumRow { point: op.grid().point(op.nodes()[k]), eigenvalues: ev[..n].to_vec() }
    })
}

//! Uniform grids, closed-form point functions and grid fields with
//! finite-difference access.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

/// Uniform tensor grid with spacing `h` starting at `lo`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    n: usize,
    h: f64,
    lo: Vec<f64>,
    shape: Vec<usize>,
    #[serde(skip)]
    strides: Vec<usize>,
}

impl Grid {
    pub fn new(n: usize, h: f64, lo: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::InvalidInput(format!("complex dimension {n} not supported")));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidInput(format!("grid spacing {h} must be positive")));
        }
        let d = 2 * n;
        if lo.len() != d || shape.len() != d || shape.contains(&0) {
            return Err(Error::InvalidInput("grid origin/shape dimension mismatch".into()));
        }
        let mut strides = vec![1; d];
        for a in (0..d - 1).rev() {
            strides[a] = strides[a + 1] * shape[a + 1];
        }
        Ok(Self { n, h, lo, shape, strides })
    }

    /// Grid covering `bbox` with nodes at `lo + k h`.
    pub fn covering(n: usize, bbox: &BoundingBox, h: f64) -> Result<Self> {
        if bbox.dim() != 2 * n {
            return Err(Error::InvalidInput("box dimension does not match n".into()));
        }
        let shape = bbox.lo.iter().zip(&bbox.hi).map(|(a, b)| ((b - a) / h + 1e-9).floor() as usize + 1).collect();
        Self::new(n, h, bbox.lo.clone(), shape)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox::new(
            self.lo.clone(),
            self.lo.iter().zip(&self.shape).map(|(l, s)| l + (*s as f64 - 1.0) * self.h).collect(),
        )
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for a in 0..self.dim() {
            out[a] = idx / self.strides[a];
            idx %= self.strides[a];
        }
        out
    }

    pub fn flat_index(&self, mi: &[usize]) -> usize {
        mi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim()];
        self.point_into(idx, &mut p);
        p
    }

    pub fn point_into(&self, mut idx: usize, p: &mut [f64]) {
        for a in 0..self.dim() {
            let k = idx / self.strides[a];
            idx %= self.strides[a];
            p[a] = self.lo[a] + k as f64 * self.h;
        }
    }

    /// Index `idx` shifted by `off[a]` steps along each axis, if still on the grid.
    pub fn offset(&self, idx: usize, off: &[isize]) -> Option<usize> {
        let mut out = idx as isize;
        let mut rem = idx;
        for a in 0..self.dim() {
            let k = (rem / self.strides[a]) as isize;
            rem %= self.strides[a];
            let nk = k + off[a];
            if nk < 0 || nk >= self.shape[a] as isize {
                return None;
            }
            out += off[a] * self.strides[a] as isize;
        }
        Some(out as usize)
    }

    /// Node whose coordinates are within `1e-6 h` of `p`.
    pub fn locate(&self, p: &[f64]) -> Option<usize> {
        let mut mi = vec![0; self.dim()];
        for a in 0..self.dim() {
            let t = (p[a] - self.lo[a]) / self.h;
            let k = t.round();
            if (t - k).abs() > 1e-6 || k < 0.0 || k >= self.shape[a] as f64 {
                return None;
            }
            mi[a] = k as usize;
        }
        Some(self.flat_index(&mi))
    }

    /// Nearest node to `p`, clamped to the grid.
    pub fn nearest(&self, p: &[f64]) -> usize {
        let mi: Vec<usize> = (0..self.dim())
            .map(|a| {
                let t = ((p[a] - self.lo[a]) / self.h).round();
                t.clamp(0.0, self.shape[a] as f64 - 1.0) as usize
            })
            .collect();
        self.flat_index(&mi)
    }

    /// Grid metadata equality up to floating-point noise.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n
            && self.shape == other.shape
            && (self.h - other.h).abs() <= 1e-12 * self.h
            && self.lo.iter().zip(&other.lo).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()))
    }
}

/// A real function on R^{2n}, with finite-difference derivatives by default.
pub trait PointFn: Send + Sync {
    fn value(&self, p: &[f64]) -> f64;

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let s = 1e-5;
        let mut q = p.to_vec();
        (0..p.len())
            .map(|a| {
                q[a] = p[a] + s;
                let fp = self.value(&q);
                q[a] = p[a] - s;
                let fm = self.value(&q);
                q[a] = p[a];
                (fp - fm) / (2.0 * s)
            })
            .collect()
    }

    /// Row-major Hessian.
    fn hessian(&self, p: &[f64]) -> Vec<f64> {
        let s = 1e-4;
        let d = p.len();
        let mut out = vec![0.0; d * d];
        let mut q = p.to_vec();
        let f0 = self.value(p);
        for a in 0..d {
            q[a] = p[a] + s;
            let fp = self.value(&q);
            q[a] = p[a] - s;
            let fm = self.value(&q);
            q[a] = p[a];
            out[a * d + a] = (fp - 2.0 * f0 + fm) / (s * s);
            for b in (a + 1)..d {
                let mut acc = 0.0;
                for (sa, sb, sign) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                    q[a] = p[a] + sa * s;
                    q[b] = p[b] + sb * s;
                    acc += sign * self.value(&q);
                }
                q[a] = p[a];
                q[b] = p[b];
                let v = acc / (4.0 * s * s);
                out[a * d + b] = v;
                out[b * d + a] = v;
            }
        }
        out
    }

    /// Whether the function may be evaluated at `p`.
    fn contains(&self, _p: &[f64]) -> bool {
        true
    }
}

impl<F> PointFn for F
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn value(&self, p: &[f64]) -> f64 {
        self(p)
    }
}

/// Shared handle to a point function.
pub type SharedFn = Arc<dyn PointFn>;

/// A function given by closures for its value and gradient.
pub struct Analytic<V, G> {
    pub value: V,
    pub gradient: G,
}

impl<V, G> PointFn for Analytic<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn value(&self, p: &[f64]) -> f64 {
        (self.value)(p)
    }

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        (self.gradient)(p)
    }
}

/// Values on a grid; `NaN` marks points where the field is undefined.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

/// Cubic Lagrange weights on nodes `-1, 0, 1, 2` at offset `t`.
fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for a grid of {} points", values.len(), grid.len())));
        }
        Ok(Self { grid, values })
    }

    pub fn filled(grid: Arc<Grid>, v: f64) -> Self {
        let len = grid.len();
        Self { grid, values: vec![v; len] }
    }

    pub fn from_fn(grid: Arc<Grid>, f: &dyn PointFn) -> Self {
        let values = crate::par::map_range(grid.len(), |i| f.value(&grid.point(i)));
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(self.grid.same_as(&other.grid));
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Largest finite absolute value.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().filter(|v| v.is_finite()).fold(0.0, |m, v| m.max(v.abs()))
    }

    fn at(&self, idx: usize, off: &[isize]) -> Option<f64> {
        let j = self.grid.offset(idx, off)?;
        let v = self.values[j];
        v.is_finite().then_some(v)
    }

    fn unit(&self, a: usize, k: isize) -> Vec<isize> {
        let mut off = vec![0; self.grid.dim()];
        off[a] = k;
        off
    }

    /// First derivative along axis `a`: central, or one-sided second order
    /// when one neighbour is missing.
    pub fn d1(&self, idx: usize, a: usize) -> Option<f64> {
        let h = self.grid.h();
        let u0 = self.at(idx, &self.unit(a, 0))?;
        match (self.at(idx, &self.unit(a, 1)), self.at(idx, &self.unit(a, -1))) {
            (Some(up), Some(um)) => Some((up - um) / (2.0 * h)),
            (Some(u1), None) => {
                let u2 = self.at(idx, &self.unit(a, 2))?;
                Some((-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * h))
            }
            (None, Some(u1)) => {
                let u2 = self.at(idx, &self.unit(a, -2))?;
                Some((3.0 * u0 - 4.0 * u1 + u2) / (2.0 * h))
            }
            (None, None) => None,
        }
    }

    /// Second derivative along axes `a`, `b`. Pure derivatives fall back to
    /// one-sided formulas; mixed ones need the central stencil.
    pub fn d2(&self, idx: usize, a: usize, b: usize) -> Option<f64> {
        let h2 = self.grid.h() * self.grid.h();
        let u0 = self.at(idx, &self.unit(a, 0))?;
        if a == b {
            return match (self.at(idx, &self.unit(a, 1)), self.at(idx, &self.unit(a, -1))) {
                (Some(up), Some(um)) => Some((up - 2.0 * u0 + um) / h2),
                (Some(_), None) => {
                    let u = [1, 2, 3].map(|k| self.at(idx, &self.unit(a, k)));
                    Some((2.0 * u0 - 5.0 * u[0]? + 4.0 * u[1]? - u[2]?) / h2)
                }
                (None, Some(_)) => {
                    let u = [-1, -2, -3].map(|k| self.at(idx, &self.unit(a, k)));
                    Some((2.0 * u0 - 5.0 * u[0]? + 4.0 * u[1]? - u[2]?) / h2)
                }
                (None, None) => None,
            };
        }
        let mut acc = 0.0;
        let d = self.grid.dim();
        for (sa, sb, sign) in [(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)] {
            let mut off = vec![0; d];
            off[a] = sa;
            off[b] = sb;
            acc += sign * self.at(idx, &off)?;
        }
        Some(acc / (4.0 * h2))
    }

    pub fn gradient_at(&self, idx: usize) -> Option<Vec<f64>> {
        (0..self.grid.dim()).map(|a| self.d1(idx, a)).collect()
    }

    /// Row-major Hessian at a node.
    pub fn hessian_at(&self, idx: usize) -> Option<Vec<f64>> {
        let d = self.grid.dim();
        let mut out = vec![0.0; d * d];
        for a in 0..d {
            for b in a..d {
                let v = self.d2(idx, a, b)?;
                out[a * d + b] = v;
                out[b * d + a] = v;
            }
        }
        Some(out)
    }

    /// Tensor cubic interpolation; `None` if any of the `4^d` support nodes
    /// is missing.
    pub fn interpolate(&self, p: &[f64]) -> Option<f64> {
        let g = &self.grid;
        let d = g.dim();
        let h = g.h();
        let mut base = [0isize; 4];
        let mut w = [[0.0; 4]; 4];
        for a in 0..d {
            let t = (p[a] - g.lo()[a]) / h;
            let k = t.floor();
            let k = k.clamp(1.0, g.shape()[a] as f64 - 3.0);
            if !(t >= 0.0 && t <= g.shape()[a] as f64 - 1.0) || g.shape()[a] < 4 {
                return None;
            }
            base[a] = k as isize - 1;
            w[a] = cubic_weights(t - k);
        }
        let mut acc = 0.0;
        let total = 1usize << (2 * d);
        for c in 0..total {
            let mut idx = 0usize;
            let mut wt = 1.0;
            for a in 0..d {
                let k = (c >> (2 * a)) & 3;
                wt *= w[a][k];
                idx += (base[a] as usize + k) * g.strides()[a];
            }
            let v = self.values[idx];
            if !v.is_finite() {
                return None;
            }
            acc += wt * v;
        }
        Some(acc)
    }
}

impl PointFn for ScalarField {
    fn value(&self, p: &[f64]) -> f64 {
        self.interpolate(p).unwrap_or(f64::NAN)
    }

    fn contains(&self, p: &[f64]) -> bool {
        self.interpolate(p).is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid2() -> Arc<Grid> {
        Arc::new(Grid::covering(1, &BoundingBox::cube(2, 1.0), 0.125).unwrap())
    }

    #[test]
    fn index_round_trip() {
        let g = Grid::covering(2, &BoundingBox::cube(4, 1.0), 0.25).unwrap();
        assert_eq!(g.shape(), &[9, 9, 9, 9]);
        let idx = g.flat_index(&[1, 2, 3, 4]);
        assert_eq!(g.multi_index(idx), vec![1, 2, 3, 4]);
        let p = g.point(idx);
        assert_eq!(g.locate(&p), Some(idx));
        assert_eq!(g.offset(idx, &[-1, 0, 0, 0]), Some(g.flat_index(&[0, 2, 3, 4])));
        assert_eq!(g.offset(idx, &[-2, 0, 0, 0]), None);
    }

    #[test]
    fn stencils_are_exact_on_quadratics() {
        let g = grid2();
        let f = ScalarField::from_fn(g.clone(), &|p: &[f64]| 3.0 * p[0] * p[0] - p[0] * p[1] + 0.5 * p[1]);
        let idx = g.locate(&[0.25, -0.5]).unwrap();
        assert_relative_eq!(f.d2(idx, 0, 0).unwrap(), 6.0, epsilon = 1e-10);
        assert_relative_eq!(f.d2(idx, 0, 1).unwrap(), -1.0, epsilon = 1e-10);
        assert_relative_eq!(f.d1(idx, 1).unwrap(), -0.25 + 0.5, epsilon = 1e-12);
        let edge = g.locate(&[-1.0, 0.0]).unwrap();
        assert_relative_eq!(f.d1(edge, 0).unwrap(), -6.0, epsilon = 1e-10);
        assert_relative_eq!(f.d2(edge, 0, 0).unwrap(), 6.0, epsilon = 1e-9);
        assert!(f.d2(edge, 0, 1).is_none());
    }

    #[test]
    fn cubic_interpolation_reproduces_cubics() {
        let g = grid2();
        let c = |p: &[f64]| p[0].powi(3) - 2.0 * p[0] * p[1] * p[1] + p[1];
        let f = ScalarField::from_fn(g, &c);
        let p = [0.31, -0.47];
        assert_relative_eq!(f.value(&p), c(&p), epsilon = 1e-12);
        assert!(!f.contains(&[1.2, 0.0]));
    }

    #[test]
    fn default_derivatives_of_point_fn() {
        let f = |p: &[f64]| p[0] * p[0] * p[1];
        let gr = f.gradient(&[1.0, 2.0]);
        assert_relative_eq!(gr[0], 4.0, epsilon = 1e-8);
        let he = f.hessian(&[1.0, 2.0]);
        assert_relative_eq!(he[1], 2.0, epsilon = 1e-6);
        assert_relative_eq!(he[0], 4.0, epsilon = 1e-6);
    }
}

//! Small Hermitian matrices (complex dimension 1 or 2) and a preconditioned
//! BiCGSTAB for the Newton systems.

use num_complex::Complex64;
use serde::Serialize;

use crate::par;

/// Hermitian `n x n` matrix, `n` in `{1, 2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    d0: f64,
    d1: f64,
    off: Complex64,
}

impl HermitianMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n == 1 || n == 2, "complex dimension must be 1 or 2");
        Self { n, d0: 0.0, d1: 0.0, off: Complex64::new(0.0, 0.0) }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    pub fn scalar(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n);
        m.d0 = s;
        if n == 2 {
            m.d1 = s;
        }
        m
    }

    /// Build from a row-major complex matrix, replacing it by `(M + M*)/2`.
    pub fn from_symmetrized(n: usize, m: &[Complex64]) -> Self {
        assert_eq!(m.len(), n * n);
        let mut h = Self::zeros(n);
        h.d0 = m[0].re;
        if n == 2 {
            h.d1 = m[3].re;
            h.off = 0.5 * (m[1] + m[2].conj());
        }
        h
    }

    /// Build from the real diagonal and the upper off-diagonal entry.
    pub fn from_parts(n: usize, diag: [f64; 2], off: Complex64) -> Self {
        let mut h = Self::zeros(n);
        h.d0 = diag[0];
        if n == 2 {
            h.d1 = diag[1];
            h.off = off;
        }
        h
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry `(p, q)`, i.e. `A_{p qbar}`.
    pub fn get(&self, p: usize, q: usize) -> Complex64 {
        match (p, q) {
            (0, 0) => Complex64::new(self.d0, 0.0),
            (1, 1) => Complex64::new(self.d1, 0.0),
            (0, 1) => self.off,
            (1, 0) => self.off.conj(),
            _ => panic!("index out of range"),
        }
    }

    pub fn off_diagonal(&self) -> Complex64 {
        self.off
    }

    pub fn diagonal(&self) -> [f64; 2] {
        [self.d0, self.d1]
    }

    pub fn det(&self) -> f64 {
        if self.n == 1 {
            self.d0
        } else {
            self.d0 * self.d1 - self.off.norm_sqr()
        }
    }

    pub fn trace(&self) -> f64 {
        if self.n == 1 {
            self.d0
        } else {
            self.d0 + self.d1
        }
    }

    /// Eigenvalues in ascending order (the second is repeated when `n = 1`).
    pub fn eigenvalues(&self) -> [f64; 2] {
        if self.n == 1 {
            return [self.d0, self.d0];
        }
        let mean = 0.5 * (self.d0 + self.d1);
        let half = 0.5 * (self.d0 - self.d1);
        let r = (half * half + self.off.norm_sqr()).sqrt();
        [mean - r, mean + r]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues()[1]
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        if self.n == 1 {
            return Some(Self::scalar(1, 1.0 / det));
        }
        Some(Self { n: 2, d0: self.d1 / det, d1: self.d0 / det, off: -self.off / det })
    }

    /// `sum_{p,q} c_p conj(c_q) A_{p qbar}`.
    pub fn quadratic_form(&self, c: &[Complex64]) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..self.n {
            for q in 0..self.n {
                acc += c[p] * c[q].conj() * self.get(p, q);
            }
        }
        acc.re
    }

    /// `tr(self * other)`, real for Hermitian arguments.
    pub fn trace_product(&self, other: &Self) -> f64 {
        if self.n == 1 {
            return self.d0 * other.d0;
        }
        self.d0 * other.d0 + self.d1 * other.d1 + 2.0 * (self.off * other.off.conj()).re
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, d0: self.d0 * s, d1: self.d1 * s, off: self.off * s }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { n: self.n, d0: self.d0 + other.d0, d1: self.d1 + other.d1, off: self.off + other.off }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m = (self.d0 - other.d0).abs();
        if self.n == 2 {
            m = m.max((self.d1 - other.d1).abs()).max((self.off - other.off).norm());
        }
        m
    }
}

/// Outcome of an iterative linear solve.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct LinearSolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    par::dot(v, v).sqrt()
}

/// Jacobi-preconditioned BiCGSTAB for `A x = b`; `apply(x, y)` writes `y = A x`.
/// `x` holds the initial guess on entry.
pub fn bicgstab<F>(apply: F, diag: &[f64], b: &[f64], x: &mut [f64], rtol: f64, max_iter: usize) -> LinearSolveStats
where
    F: Fn(&[f64], &mut [f64]),
{
    let len = b.len();
    let inv_diag: Vec<f64> = diag.iter().map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let precond = |src: &[f64], dst: &mut [f64]| {
        for ((d, s), w) in dst.iter_mut().zip(src).zip(&inv_diag) {
            *d = s * w;
        }
    };

    let b_norm = norm(b).max(f64::MIN_POSITIVE);
    let mut r = vec![0.0; len];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut res = norm(&r) / b_norm;
    if res <= rtol {
        return LinearSolveStats { iterations: 0, relative_residual: res, converged: true };
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0f64, 1.0f64, 1.0f64);
    let mut v = vec![0.0; len];
    let mut p = vec![0.0; len];
    let mut y = vec![0.0; len];
    let mut s = vec![0.0; len];
    let mut z = vec![0.0; len];
    let mut t = vec![0.0; len];

    for it in 1..=max_iter {
        let rho_new = par::dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            return LinearSolveStats { iterations: it, relative_residual: res, converged: false };
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..len {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(&p, &mut y);
        apply(&y, &mut v);
        let denom = par::dot(&r_hat, &v);
        if denom == 0.0 {
            return LinearSolveStats { iterations: it, relative_residual: res, converged: false };
        }
        alpha = rho / denom;
        for i in 0..len {
            s[i] = r[i] - alpha * v[i];
        }
        let s_norm = norm(&s) / b_norm;
        if s_norm <= rtol {
            for i in 0..len {
                x[i] += alpha * y[i];
            }
            return LinearSolveStats { iterations: it, relative_residual: s_norm, converged: true };
        }
        precond(&s, &mut z);
        apply(&z, &mut t);
        let tt = par::dot(&t, &t);
        omega = if tt > 0.0 { par::dot(&t, &s) / tt } else { 0.0 };
        for i in 0..len {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm(&r) / b_norm;
        if res <= rtol {
            return LinearSolveStats { iterations: it, relative_residual: res, converged: true };
        }
    }
    LinearSolveStats { iterations: max_iter, relative_residual: res, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigenvalues_of_indefinite_form() {
        let a = HermitianMatrix::from_parts(2, [1.0, -1.0], c(0.0, 0.0));
        assert_eq!(a.eigenvalues(), [-1.0, 1.0]);
        assert_eq!(a.det(), -1.0);
    }

    #[test]
    fn inverse_and_trace_product() {
        let a = HermitianMatrix::from_parts(2, [2.0, 3.0], c(0.5, -0.25));
        let inv = a.inverse().unwrap();
        // tr(A A^{-1}) = n
        assert_relative_eq!(a.trace_product(&inv), 2.0, epsilon = 1e-14);
        let [lo, hi] = a.eigenvalues();
        assert_relative_eq!(lo * hi, a.det(), epsilon = 1e-14);
        assert_relative_eq!(lo + hi, a.trace(), epsilon = 1e-14);
    }

    #[test]
    fn symmetrization_averages_off_diagonal() {
        let m = [c(1.0, 0.1), c(0.2, 0.3), c(0.4, 0.1), c(2.0, 0.0)];
        let h = HermitianMatrix::from_symmetrized(2, &m);
        assert_relative_eq!(h.get(0, 1).re, 0.3);
        assert_relative_eq!(h.get(0, 1).im, 0.1);
        assert_eq!(h.get(1, 0), h.get(0, 1).conj());
    }

    #[test]
    fn quadratic_form_is_real_and_matches_eigen_bounds() {
        let a = HermitianMatrix::from_parts(2, [2.0, 1.0], c(0.3, 0.4));
        let v = [c(0.6, 0.0), c(0.0, 0.8)];
        let q = a.quadratic_form(&v);
        let [lo, hi] = a.eigenvalues();
        assert!(q >= lo - 1e-12 && q <= hi + 1e-12);
    }

    #[test]
    fn bicgstab_solves_tridiagonal_system() {
        let n = 50;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut s = 3.0 * x[i];
                if i > 0 {
                    s -= x[i - 1];
                }
                if i + 1 < n {
                    s -= 0.5 * x[i + 1];
                }
                y[i] = s;
            }
        };
        let truth: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        apply(&truth, &mut b);
        let mut x = vec![0.0; n];
        let stats = bicgstab(apply, &vec![3.0; n], &b, &mut x, 1e-12, 200);
        assert!(stats.converged);
        for (a, t) in x.iter().zip(&truth) {
            assert_relative_eq!(a, t, epsilon = 1e-9);
        }
    }
}

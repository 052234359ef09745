//! Pseudoholomorphic disks with prescribed jets, and disk-based checks of
//! plurisubharmonicity.
//!
//! A disk is a map `lambda` on `|w| <= r` with `d_x lambda + J(lambda) d_y lambda = 0`.
//! Identifying `R^{2n}` with `C^n` through `J_st`, the equation reads
//! `2 d_wbar L = C[(J_st - J(lambda)) d_y lambda]`. On the rescaled disk
//! `w = r zeta` the map is a polynomial in `zeta, zeta_bar`; each Picard step
//! projects the right-hand side on that basis, integrates in `zeta_bar` term by
//! term and restores the jets with the holomorphic part.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::PointFn;
use crate::geometry::{j_standard, AlmostComplexStructure, CVector, Frame};
use crate::operator::a_matrix_fn;

#[derive(Clone, Debug, Serialize)]
pub struct DiskOptions {
    /// Parameter disk radius `r`.
    pub radius: f64,
    pub tol: f64,
    /// Total polynomial degree in `zeta, zeta_bar`.
    pub degree: usize,
    pub angles: usize,
    pub radial_nodes: usize,
    pub max_iterations: usize,
    /// Largest accepted ratio of successive Picard updates.
    pub contraction_limit: f64,
}

impl Default for DiskOptions {
    fn default() -> Self {
        Self {
            radius: 0.1,
            tol: 1e-8,
            degree: 12,
            angles: 64,
            radial_nodes: 32,
            max_iterations: 50,
            contraction_limit: 0.9,
        }
    }
}

/// A pseudoholomorphic disk.
#[derive(Clone, Debug, Serialize)]
pub struct Disk {
    pub center: Vec<f64>,
    pub jets: Vec<Vec<f64>>,
    pub radius: f64,
    pub degree: usize,
    /// `coeffs[idx(j, k)]` multiplies `zeta^j zeta_bar^k`; one complex entry
    /// per complex coordinate.
    #[serde(skip)]
    coeffs: Vec<Vec<Complex64>>,
    /// Max of `|d_x lambda + J(lambda) d_y lambda|` over the sample grid.
    pub residual: f64,
    pub iterations: usize,
    /// Largest ratio of successive Picard updates.
    pub contraction: f64,
}

fn term_index(degree: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for s in 0..=degree {
        for k in 0..=s {
            out.push((s - k, k));
        }
    }
    out
}

fn idx(j: usize, k: usize) -> usize {
    let s = j + k;
    s * (s + 1) / 2 + k
}

fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

fn to_real(v: &[Complex64]) -> Vec<f64> {
    v.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// Sample grid on the unit disk with precomputed powers.
struct PolarGrid {
    points: Vec<Complex64>,
    /// `pow[s][t] = zeta_s^t`, `powc` the conjugates.
    pow: Vec<Vec<Complex64>>,
    powc: Vec<Vec<Complex64>>,
    radii: Vec<f64>,
    angles: usize,
}

impl PolarGrid {
    fn new(radial: usize, angles: usize, degree: usize) -> Self {
        let radii: Vec<f64> = (0..radial)
            .map(|i| 0.5 * (1.0 - (std::f64::consts::PI * (i as f64 + 0.5) / radial as f64).cos()))
            .collect();
        let mut points = Vec::with_capacity(radial * angles);
        for &r in &radii {
            for t in 0..angles {
                points.push(Complex64::from_polar(r, 2.0 * std::f64::consts::PI * t as f64 / angles as f64));
            }
        }
        let pow = points.iter().map(|z| powers(*z, degree)).collect();
        let powc = points.iter().map(|z| powers(z.conj(), degree)).collect();
        Self { points, pow, powc, radii, angles }
    }
}

fn powers(z: Complex64, degree: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(degree + 1);
    let mut p = Complex64::new(1.0, 0.0);
    for _ in 0..=degree {
        out.push(p);
        p *= z;
    }
    out
}

/// Value, `d_zeta` and `d_zetabar` of a coefficient polynomial at one sample.
fn eval_poly(
    coeffs: &[Vec<Complex64>],
    terms: &[(usize, usize)],
    pw: &[Complex64],
    pc: &[Complex64],
    n: usize,
) -> [Vec<Complex64>; 3] {
    let zero = Complex64::new(0.0, 0.0);
    let (mut v, mut dz, mut dzb) = (vec![zero; n], vec![zero; n], vec![zero; n]);
    for (t, &(j, k)) in terms.iter().enumerate() {
        let c = &coeffs[t];
        let m = pw[j] * pc[k];
        let mz = if j > 0 { pw[j - 1] * pc[k] * j as f64 } else { zero };
        let mzb = if k > 0 { pw[j] * pc[k - 1] * k as f64 } else { zero };
        for q in 0..n {
            v[q] += c[q] * m;
            dz[q] += c[q] * mz;
            dzb[q] += c[q] * mzb;
        }
    }
    [v, dz, dzb]
}

/// Least-squares fit of each angular mode over the radial nodes.
struct Projector {
    /// Per angular frequency `m`: the degrees used and the pseudo-inverse.
    modes: Vec<(i64, Vec<usize>, DMatrix<f64>)>,
}

impl Projector {
    fn new(radii: &[f64], degree: usize) -> Self {
        let max = degree as i64;
        let mut modes = Vec::new();
        for m in -max..=max {
            let degs: Vec<usize> = (m.unsigned_abs() as usize..=degree).step_by(2).collect();
            if degs.is_empty() {
                continue;
            }
            let v = DMatrix::from_fn(radii.len(), degs.len(), |i, c| radii[i].powi(degs[c] as i32));
            let pinv = v.pseudo_inverse(1e-14).expect("radial fit");
            modes.push((m, degs, pinv));
        }
        Self { modes }
    }

    /// Coefficients (total degree <= `degree`) of samples `g` on the polar grid.
    fn project(&self, grid: &PolarGrid, g: &[Vec<Complex64>], degree: usize, n: usize) -> Vec<Vec<Complex64>> {
        let zero = Complex64::new(0.0, 0.0);
        let nterms = (degree + 1) * (degree + 2) / 2;
        let mut out = vec![vec![zero; n]; nterms];
        let na = grid.angles;
        let nr = grid.radii.len();
        for (m, degs, pinv) in &self.modes {
            for q in 0..n {
                let mut modes = DVector::<Complex64>::zeros(nr);
                for i in 0..nr {
                    let mut acc = zero;
                    for t in 0..na {
                        let th = 2.0 * std::f64::consts::PI * t as f64 / na as f64;
                        acc += g[i * na + t][q] * Complex64::from_polar(1.0, -(*m as f64) * th);
                    }
                    modes[i] = acc / na as f64;
                }
                let re = pinv * modes.map(|c| c.re);
                let im = pinv * modes.map(|c| c.im);
                for (c, &s) in degs.iter().enumerate() {
                    let j = ((s as i64 + m) / 2) as usize;
                    let k = ((s as i64 - m) / 2) as usize;
                    out[idx(j, k)][q] = Complex64::new(re[c], im[c]);
                }
            }
        }
        out
    }
}

fn factorial(l: usize) -> f64 {
    (1..=l).map(|x| x as f64).product()
}

/// Build a disk through `center` with `d^l lambda / dx^l (0) = jets[l - 1]`.
pub fn make_disk(
    structure: &AlmostComplexStructure,
    center: &[f64],
    jets: &[Vec<f64>],
    opts: &DiskOptions,
) -> Result<Disk> {
    let d = structure.dim();
    let n = structure.n();
    if jets.is_empty() || jets.len() > 2 {
        return Err(Error::JetTooLong(jets.len()));
    }
    if center.len() != d || jets.iter().any(|v| v.len() != d) {
        return Err(Error::InvalidInput("disk data dimension mismatch".into()));
    }
    if !(opts.radius > 0.0) || opts.degree < jets.len() + 1 {
        return Err(Error::InvalidInput("disk radius and degree must be positive".into()));
    }
    let r = opts.radius;
    let deg = opts.degree;
    let terms = term_index(deg);
    let grid = PolarGrid::new(opts.radial_nodes, opts.angles, deg);
    let proj = Projector::new(&grid.radii, deg - 1);
    let jst = j_standard(n);
    let zero = Complex64::new(0.0, 0.0);
    // Jets in the rescaled variable, as complex vectors.
    let scaled: Vec<Vec<Complex64>> = jets
        .iter()
        .enumerate()
        .map(|(l, v)| to_complex(&v.iter().map(|x| x * r.powi(l as i32 + 1)).collect::<Vec<_>>()))
        .collect();

    let holomorphic_part = |corr: &mut Vec<Vec<Complex64>>| {
        corr[0] = to_complex(center);
        for (l, v) in scaled.iter().enumerate() {
            let l = l + 1;
            let mut a = v.iter().map(|c| c / factorial(l)).collect::<Vec<_>>();
            for k in 1..=l {
                for q in 0..n {
                    a[q] -= corr[idx(l - k, k)][q];
                }
            }
            corr[idx(l, 0)] = a;
        }
    };

    let mut coeffs = vec![vec![zero; n]; terms.len()];
    holomorphic_part(&mut coeffs);

    let residual_and_rhs = |coeffs: &[Vec<Complex64>]| -> Result<(f64, Vec<Vec<Complex64>>)> {
        let mut res: f64 = 0.0;
        let mut rhs = Vec::with_capacity(grid.points.len());
        for s in 0..grid.points.len() {
            let [v, dz, dzb] = eval_poly(coeffs, &terms, &grid.pow[s], &grid.powc[s], n);
            let lam = to_real(&v);
            if lam.iter().any(|x| !x.is_finite()) {
                return Err(Error::NoContraction { iterations: 0, ratio: f64::INFINITY });
            }
            let dxi: Vec<Complex64> = (0..n).map(|q| dz[q] + dzb[q]).collect();
            let deta: Vec<Complex64> = (0..n).map(|q| (dz[q] - dzb[q]) * Complex64::i()).collect();
            let (dxi, deta) = (to_real(&dxi), to_real(&deta));
            let j = structure.eval(&lam);
            let mut q_vec = vec![0.0; d];
            for a in 0..d {
                let mut jy = 0.0;
                let mut diff = 0.0;
                for b in 0..d {
                    jy += j[(a, b)] * deta[b];
                    diff += (jst[(a, b)] - j[(a, b)]) * deta[b];
                }
                res = res.max((dxi[a] + jy).abs());
                q_vec[a] = diff;
            }
            rhs.push(to_complex(&q_vec).into_iter().map(|c| c * 0.5).collect());
        }
        Ok((res / r, rhs))
    };

    let mut prev_update = f64::INFINITY;
    let mut contraction: f64 = 0.0;
    let mut slow = 0;
    for it in 0..=opts.max_iterations {
        let (residual, rhs) = residual_and_rhs(&coeffs)?;
        let g = proj.project(&grid, &rhs, deg - 1, n);
        let mut next = vec![vec![zero; n]; terms.len()];
        for (t, &(j, k)) in term_index(deg - 1).iter().enumerate() {
            for q in 0..n {
                next[idx(j, k + 1)][q] = g[t][q] / (k + 1) as f64;
            }
        }
        holomorphic_part(&mut next);
        let update = next
            .iter()
            .zip(&coeffs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()).sum::<f64>())
            .sum::<f64>();
        if residual <= opts.tol && update <= opts.tol * r {
            return Ok(Disk {
                center: center.to_vec(),
                jets: jets.to_vec(),
                radius: r,
                degree: deg,
                coeffs,
                residual,
                iterations: it,
                contraction,
            });
        }
        if !update.is_finite() {
            return Err(Error::NoContraction { iterations: it, ratio: f64::INFINITY });
        }
        if it > 0 && update > 1e-13 * (1.0 + r) {
            let ratio = update / prev_update;
            contraction = contraction.max(ratio.min(f64::MAX));
            if ratio > opts.contraction_limit {
                slow += 1;
                if slow >= 2 || ratio > 1.0 {
                    return Err(Error::NoContraction { iterations: it, ratio });
                }
            }
        }
        prev_update = update;
        coeffs = next;
    }
    Err(Error::NoContraction { iterations: opts.max_iterations, ratio: contraction })
}

impl Disk {
    /// `lambda(w)` for `|w| <= radius`.
    pub fn eval(&self, w: Complex64) -> Vec<f64> {
        let z = w / self.radius;
        let n = self.center.len() / 2;
        let terms = term_index(self.degree);
        let [v, _, _] = eval_poly(&self.coeffs, &terms, &powers(z, self.degree), &powers(z.conj(), self.degree), n);
        to_real(&v)
    }

    /// `d lambda / dx` and `d lambda / dy` at `w`.
    pub fn derivatives(&self, w: Complex64) -> (Vec<f64>, Vec<f64>) {
        let z = w / self.radius;
        let n = self.center.len() / 2;
        let terms = term_index(self.degree);
        let [_, dz, dzb] = eval_poly(&self.coeffs, &terms, &powers(z, self.degree), &powers(z.conj(), self.degree), n);
        let dx: Vec<Complex64> = (0..n).map(|q| (dz[q] + dzb[q]) / self.radius).collect();
        let dy: Vec<Complex64> = (0..n).map(|q| (dz[q] - dzb[q]) * Complex64::i() / self.radius).collect();
        (to_real(&dx), to_real(&dy))
    }

    /// Samples `(w, lambda(w))` on a polar grid.
    pub fn samples(&self, radial: usize, angles: usize) -> Vec<(Complex64, Vec<f64>)> {
        let mut out = Vec::with_capacity(radial * angles + 1);
        out.push((Complex64::new(0.0, 0.0), self.eval(Complex64::new(0.0, 0.0))));
        for i in 1..=radial {
            let rr = self.radius * i as f64 / radial as f64;
            for t in 0..angles {
                let w = Complex64::from_polar(rr, 2.0 * std::f64::consts::PI * t as f64 / angles as f64);
                out.push((w, self.eval(w)));
            }
        }
        out
    }

    /// Direction `(v_1 - i J v_1) / 2` in `T^{1,0}` at the centre.
    pub fn direction(&self, structure: &AlmostComplexStructure) -> CVector {
        tangent_direction(structure, &self.center, &self.jets[0])
    }
}

fn tangent_direction(structure: &AlmostComplexStructure, p: &[f64], v: &[f64]) -> CVector {
    let j = structure.eval(p);
    let d = v.len();
    CVector::from_fn(d, |a, _| {
        let jv: f64 = (0..d).map(|b| j[(a, b)] * v[b]).sum();
        Complex64::new(0.5 * v[a], -0.5 * jv)
    })
}

/// Mean of `u` over the circle `|w| = s` of the disk.
fn circle_mean(u: &dyn PointFn, disk: &Disk, s: f64, angles: usize) -> Result<f64> {
    let mut acc = 0.0;
    for t in 0..angles {
        let w = Complex64::from_polar(s, 2.0 * std::f64::consts::PI * t as f64 / angles as f64);
        let p = disk.eval(w);
        if !u.contains(&p) {
            return Err(Error::DiskEscapesDomain { point: p });
        }
        acc += u.value(&p);
    }
    Ok(acc / angles as f64)
}

/// `Delta (u o lambda)(0)` from circle means at radii `s` and `s / 2`,
/// Richardson-extrapolated; `s` is at most the disk radius.
pub fn disk_laplacian_probe_at(u: &dyn PointFn, disk: &Disk, s: f64) -> Result<f64> {
    let s = s.min(disk.radius);
    let c = disk.eval(Complex64::new(0.0, 0.0));
    if !u.contains(&c) {
        return Err(Error::DiskEscapesDomain { point: c });
    }
    let u0 = u.value(&c);
    let m1 = 4.0 * (circle_mean(u, disk, s, 64)? - u0) / (s * s);
    let m2 = 4.0 * (circle_mean(u, disk, 0.5 * s, 64)? - u0) / (0.25 * s * s);
    Ok((4.0 * m2 - m1) / 3.0)
}

/// `Delta (u o lambda)(0)` with probe radius half the disk radius.
pub fn disk_laplacian_probe(u: &dyn PointFn, disk: &Disk) -> Result<f64> {
    disk_laplacian_probe_at(u, disk, 0.5 * disk.radius)
}

/// Coefficients of `zeta` in the frame at `p`.
pub fn frame_coordinates(frame: &Frame, p: &[f64], zeta: &CVector) -> Result<Vec<Complex64>> {
    let basis = frame.basis(p)?;
    let n = frame.n();
    let d = zeta.len();
    let z = DMatrix::<Complex64>::from_fn(d, n, |a, q| basis.zeta[q][a]);
    let zh = z.adjoint();
    let c = (&zh * &z).try_inverse().ok_or(Error::DegenerateFrame { pivot: 0.0 })? * (zh * zeta);
    Ok(c.iter().copied().collect())
}

/// `4 (A(u) zeta, zeta)` for the disk's direction, with `A` from stencil spacing `h`.
pub fn hessian_form(u: &dyn PointFn, frame: &Frame, disk: &Disk, h: f64) -> Result<f64> {
    let zeta = disk.direction(frame.structure());
    let c = frame_coordinates(frame, &disk.center, &zeta)?;
    Ok(4.0 * a_matrix_fn(u, frame, &disk.center, h)?.quadratic_form(&c))
}

#[derive(Clone, Debug, Serialize)]
pub struct DiskPshReport {
    pub margin: f64,
    pub samples: usize,
    pub worst_direction: Vec<f64>,
    pub max_residual: f64,
}

/// Minimum of `Delta (u o lambda_zeta)(0)` over the frame directions and
/// `n_samples` random unit directions `zeta` in `T^{1,0}` at `point`.
pub fn psh_check_disks<R: Rng + ?Sized>(
    u: &dyn PointFn,
    frame: &Frame,
    point: &[f64],
    n_samples: usize,
    opts: &DiskOptions,
    rng: &mut R,
) -> Result<DiskPshReport> {
    let n = frame.n();
    let basis = frame.basis(point)?;
    let mut dirs: Vec<Vec<Complex64>> =
        (0..n).map(|p| (0..n).map(|q| Complex64::new((p == q) as u8 as f64, 0.0)).collect()).collect();
    for _ in 0..n_samples {
        let c: Vec<Complex64> =
            (0..n).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        let norm = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        dirs.push(c.into_iter().map(|x| x / norm).collect());
    }
    let mut report =
        DiskPshReport { margin: f64::INFINITY, samples: dirs.len(), worst_direction: Vec::new(), max_residual: 0.0 };
    for c in dirs {
        let mut zeta = CVector::zeros(point.len());
        for (q, cq) in c.iter().enumerate() {
            zeta += &basis.zeta[q] * *cq;
        }
        let v1: Vec<f64> = zeta.iter().map(|z| 2.0 * z.re).collect();
        let disk = make_disk(frame.structure(), point, std::slice::from_ref(&v1), opts)?;
        report.max_residual = report.max_residual.max(disk.residual);
        let lap = disk_laplacian_probe(u, &disk)?;
        if lap < report.margin {
            report.margin = lap;
            report.worst_direction = v1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sq(p: &[f64]) -> f64 {
        p.iter().map(|x| x * x).sum()
    }

    #[test]
    fn standard_disk_is_affine() {
        let j = AlmostComplexStructure::standard(2);
        let e = vec![1.0, 0.0, 0.0, 0.0];
        let disk = make_disk(&j, &[0.0; 4], &[e], &DiskOptions::default()).unwrap();
        assert!(disk.residual <= 1e-12);
        let p = disk.eval(Complex64::new(0.03, 0.04));
        assert_relative_eq!(p[0], 0.03, epsilon = 1e-14);
        assert_relative_eq!(p[1], 0.04, epsilon = 1e-14);
        assert_relative_eq!(p[2], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn sheared_disk_converges_with_jets() {
        let j = AlmostComplexStructure::sheared(2, 0.05);
        let opts = DiskOptions { radius: 0.2, ..DiskOptions::default() };
        let c = [0.3, -0.1, 0.2, 0.1];
        let v1 = vec![0.6, 0.2, -0.3, 0.5];
        let disk = make_disk(&j, &c, std::slice::from_ref(&v1), &opts).unwrap();
        assert!(disk.residual <= 1e-8, "residual {}", disk.residual);
        assert!(disk.iterations <= 30);
        let z = Complex64::new(0.0, 0.0);
        assert_eq!(disk.eval(z), c.to_vec());
        let (dx, dy) = disk.derivatives(z);
        for a in 0..4 {
            assert_relative_eq!(dx[a], v1[a], epsilon = 1e-8);
        }
        let jm = j.eval(&c);
        for a in 0..4 {
            let jdy: f64 = (0..4).map(|b| jm[(a, b)] * dy[b]).sum();
            assert!((dx[a] + jdy).abs() < 1e-8);
        }
    }

    #[test]
    fn second_jet_is_met() {
        let j = AlmostComplexStructure::sheared(2, 0.05);
        let opts = DiskOptions { radius: 0.2, ..DiskOptions::default() };
        let v1 = vec![1.0, 0.0, 0.5, 0.0];
        let v2 = vec![0.0, 0.3, 0.0, -0.2];
        let disk = make_disk(&j, &[0.1, 0.0, 0.0, 0.2], &[v1, v2.clone()], &opts).unwrap();
        let s = 1e-3;
        let f = |x: f64| disk.eval(Complex64::new(x, 0.0));
        let (p, z, m) = (f(s), f(0.0), f(-s));
        for a in 0..4 {
            assert_relative_eq!((p[a] - 2.0 * z[a] + m[a]) / (s * s), v2[a], epsilon = 1e-5);
        }
    }

    #[test]
    fn disk_errors() {
        let j = AlmostComplexStructure::sheared(2, 10.0);
        let opts = DiskOptions { radius: 0.5, ..DiskOptions::default() };
        let r = make_disk(&j, &[0.5, 0.0, 0.0, 0.0], &[vec![1.0, 0.0, 1.0, 0.0]], &opts);
        assert!(matches!(r, Err(Error::NoContraction { .. })), "{r:?}");
        let js = AlmostComplexStructure::standard(1);
        let v = vec![1.0, 0.0];
        assert!(matches!(make_disk(&js, &[0.0, 0.0], &[v.clone(), v.clone(), v], &opts), Err(Error::JetTooLong(3))));
    }

    #[test]
    fn laplacian_probe_examples() {
        let j = AlmostComplexStructure::standard(2);
        let disk = make_disk(&j, &[0.0; 4], &[vec![1.0, 0.0, 0.0, 0.0]], &DiskOptions::default()).unwrap();
        assert_relative_eq!(disk_laplacian_probe(&sq, &disk).unwrap(), 4.0, epsilon = 1e-10);
        assert!(disk_laplacian_probe(&|p: &[f64]| p[0], &disk).unwrap().abs() < 1e-10);
        let tiny = crate::field::ScalarField::filled(
            std::sync::Arc::new(
                crate::field::Grid::covering(2, &crate::geometry::BoundingBox::cube(4, 0.02), 0.01).unwrap(),
            ),
            0.0,
        );
        assert!(matches!(disk_laplacian_probe(&tiny, &disk), Err(Error::DiskEscapesDomain { .. })));
    }

    #[test]
    fn sheared_probe_matches_hessian() {
        let j = AlmostComplexStructure::sheared(2, 0.05);
        let frame = crate::geometry::Frame::with_seeds(&j, vec![0, 2], 1e-5).unwrap();
        let c = vec![0.2, 0.1, -0.3, 0.05];
        let disk = make_disk(&j, &c, &[vec![0.3, -0.5, 0.7, 0.1]], &DiskOptions::default()).unwrap();
        let lap = disk_laplacian_probe(&sq, &disk).unwrap();
        let form = hessian_form(&sq, &frame, &disk, 1e-3).unwrap();
        assert!((lap - form).abs() < 1e-6 * (1.0 + lap.abs()), "{lap} vs {form}");
    }

    #[test]
    fn psh_check_examples() {
        let j = AlmostComplexStructure::standard(2);
        let frame = crate::geometry::Frame::with_seeds(&j, vec![0, 2], 1e-5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let opts = DiskOptions::default();
        let p = [0.1, 0.2, -0.1, 0.0];
        let r = psh_check_disks(&sq, &frame, &p, 8, &opts, &mut rng).unwrap();
        assert_relative_eq!(r.margin, 4.0, epsilon = 1e-8);
        let saddle = |x: &[f64]| x[0] * x[0] + x[1] * x[1] - x[2] * x[2] - x[3] * x[3];
        let r = psh_check_disks(&saddle, &frame, &p, 32, &opts, &mut rng).unwrap();
        assert_relative_eq!(r.margin, -4.0, epsilon = 1e-8);
        let r = psh_check_disks(&|x: &[f64]| x[0], &frame, &p, 32, &opts, &mut rng).unwrap();
        assert!(r.margin.abs() < 1e-9);
    }
}

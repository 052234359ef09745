use std::sync::Arc;

use acma::domain::{grid_build, DefiningFunction, GridDomain};
use acma::field::ScalarField;
use acma::geometry::{AlmostComplexStructure, BoundingBox, Frame};
use acma::operator::{psh_classify, MaOperator};
use num_complex::Complex64;
use proptest::prelude::*;

fn ball(j: &AlmostComplexStructure, h: f64) -> GridDomain {
    grid_build(&DefiningFunction::Ball, &BoundingBox::cube(j.dim(), 1.25), h, j).unwrap()
}

/// Cubic polynomial in four variables from a coefficient vector.
fn cubic(c: &[f64]) -> impl Fn(&[f64]) -> f64 + Send + Sync + Clone {
    let c = c.to_vec();
    move |p: &[f64]| {
        let mut s = c[0];
        let mut k = 1;
        for a in 0..4 {
            s += c[k] * p[a];
            k += 1;
        }
        for a in 0..4 {
            for b in a..4 {
                s += c[k] * p[a] * p[b];
                k += 1;
            }
        }
        for a in 0..4 {
            s += c[k] * p[a].powi(3);
            k += 1;
        }
        s
    }
}

const NCOEF: usize = 1 + 4 + 10 + 4;

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, NCOEF)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn a_matrix_is_linear(eps in 0.0f64..0.1, a in coeffs(), b in coeffs(), s in -2.0f64..2.0) {
        let j = AlmostComplexStructure::sheared(2, eps);
        let dom = ball(&j, 0.25);
        let g = dom.grid().clone();
        let (fa, fb) = (cubic(&a), cubic(&b));
        let ua = ScalarField::from_fn(g.clone(), &fa);
        let ub = ScalarField::from_fn(g.clone(), &fb);
        let sum = ua.zip_map(&ub, |x, y| x + s * y);
        let op = dom.operator();
        for k in (0..op.len()).step_by(5) {
            let lhs = op.a_at(sum.values(), k);
            let rhs = op.a_at(ua.values(), k).add(&op.a_at(ub.values(), k).scaled(s));
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
        }
    }

    #[test]
    fn standard_hessian_of_quadratics_is_exact(q in prop::collection::vec(-1.0f64..1.0, 10), l in prop::collection::vec(-1.0f64..1.0, 4)) {
        // u = sum_{a<=b} q_ab x_a x_b + l . x with x = (x1, y1, x2, y2).
        let mut hess = [[0.0; 4]; 4];
        let mut k = 0;
        for a in 0..4 {
            for b in a..4 {
                hess[a][b] += q[k];
                hess[b][a] += q[k];
                k += 1;
            }
        }
        let (qq, ll) = (q.clone(), l.clone());
        let u = move |p: &[f64]| {
            let mut s = 0.0;
            let mut k = 0;
            for a in 0..4 {
                for b in a..4 {
                    s += qq[k] * p[a] * p[b];
                    k += 1;
                }
            }
            s + ll.iter().zip(p).map(|(c, x)| c * x).sum::<f64>()
        };
        // d_{z_p} d_{conj z_q} u with d_z = (d_x - i d_y) / 2.
        let want = |p: usize, q: usize| {
            let (xp, yp, xq, yq) = (2 * p, 2 * p + 1, 2 * q, 2 * q + 1);
            Complex64::new(hess[xp][xq] + hess[yp][yq], hess[xp][yq] - hess[yp][xq]) * 0.25
        };
        let j = AlmostComplexStructure::standard(2);
        let dom = ball(&j, 0.25);
        let f = ScalarField::from_fn(dom.grid().clone(), &u);
        let op = dom.operator();
        for k in (0..op.len()).step_by(11) {
            let a = op.a_at(f.values(), k);
            for p in 0..2 {
                for r in 0..2 {
                    prop_assert!((a.get(p, r) - want(p, r)).norm() <= 1e-11, "{:?} vs {:?}", a.get(p, r), want(p, r));
                }
            }
        }
    }

    #[test]
    fn margin_is_positively_homogeneous(c in 0.01f64..100.0, a in coeffs()) {
        let j = AlmostComplexStructure::sheared(2, 0.05);
        let dom = ball(&j, 0.25);
        let f = cubic(&a);
        let u = ScalarField::from_fn(dom.grid().clone(), &f);
        let cu = u.map(|v| c * v);
        let (m1, m2) = (psh_classify(&u, dom.operator(), None).margin, psh_classify(&cu, dom.operator(), None).margin);
        prop_assert!((m2 - c * m1).abs() <= 1e-12 * c.max(1.0) * m1.abs().max(1.0));
    }

    #[test]
    fn det_is_frame_independent(eps in 0.0f64..0.1, a in coeffs()) {
        let j = AlmostComplexStructure::sheared(2, eps);
        let dom = ball(&j, 0.25);
        let other = Frame::with_seeds(&j, vec![2, 0], dom.frame().step()).unwrap();
        let op2 = MaOperator::new(dom.grid().clone(), &other, dom.operator().nodes().to_vec()).unwrap();
        let f = cubic(&a);
        let u = ScalarField::from_fn(dom.grid().clone(), &f);
        let op = dom.operator();
        for k in (0..op.len()).step_by(3) {
            let (d1, d2) = (op.a_at(u.values(), k).det(), op2.a_at(u.values(), k).det());
            prop_assert!((d1 - d2).abs() < 1e-8, "{} vs {}", d1, d2);
        }
    }
}

#[test]
fn a_matrix_is_hermitian_after_symmetrization() {
    let j = AlmostComplexStructure::sheared(2, 0.1);
    let dom = ball(&j, 0.25);
    let f = cubic(&[0.3, 0.1, -0.2, 0.5, 0.7, 1.0, 0.2, -0.4, 0.1, 0.9, 0.3, -0.6, 0.8, 1.2, 0.5, 0.3, 0.2, -0.1, 0.4]);
    let u = ScalarField::from_fn(Arc::clone(dom.grid()), &f);
    for a in dom.operator().a_field(&u) {
        assert!((a.get(0, 1) - a.get(1, 0).conj()).norm() <= 1e-10);
    }
}

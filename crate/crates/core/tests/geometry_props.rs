use acma::geometry::*;
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.9f64..0.9, d)
}

fn cvec(d: usize) -> impl Strategy<Value = CVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d)
        .prop_map(|v| CVector::from_iterator(v.len(), v.into_iter().map(|(a, b)| Complex64::new(a, b))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sheared_squares_to_minus_identity(n in 1usize..=2, eps in -0.5f64..0.5, p in point(4)) {
        let j = AlmostComplexStructure::sheared(n, eps);
        let m = j.eval(&p[..2 * n]);
        let r = &m * &m + nalgebra::DMatrix::identity(2 * n, 2 * n);
        prop_assert!(r.amax() <= 1e-10);
    }

    #[test]
    fn frame_reconstructs_real_basis(eps in 0.0f64..0.2, p in point(4)) {
        let j = AlmostComplexStructure::sheared(2, eps);
        let f = Frame::with_seeds(&j, vec![0, 2], ANALYTIC_FRAME_STEP).unwrap();
        let b = f.basis(&p).unwrap();
        for (e, z) in b.e.iter().zip(&b.zeta) {
            let zb = z.map(|c| c.conj());
            let sum = z + &zb;
            let je = &b.j * e;
            let diff = (z - &zb) * Complex64::i();
            for r in 0..4 {
                prop_assert!((sum[r] - Complex64::new(e[r], 0.0)).norm() <= 1e-14);
                prop_assert!((diff[r] - Complex64::new(je[r], 0.0)).norm() <= 1e-14);
            }
        }
    }

    #[test]
    fn projection_01_is_idempotent(eps in -0.2f64..0.2, p in point(4), x in cvec(4)) {
        let j = AlmostComplexStructure::sheared(2, eps).eval(&p);
        let once = project_01(&j, &x);
        let twice = project_01(&j, &once);
        prop_assert!((&twice - &once).camax() <= 1e-12);
        let split = &once + project_10(&j, &x);
        prop_assert!((&split - &x).camax() <= 1e-12);
    }

    #[test]
    fn bracket_is_antisymmetric(eps in 0.0f64..0.2, p in point(4)) {
        let j = AlmostComplexStructure::sheared(2, eps);
        let jet = Frame::with_seeds(&j, vec![0, 2], 1e-3).unwrap().jet(&p).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let fwd = jet.bracket(a, b);
                let rev = lie_bracket(&jet.zeta_bar(b), &jet.dzeta_bar(b), &jet.zeta[a], &jet.dzeta[a]);
                prop_assert!((&fwd + &rev).camax() <= 1e-12);
            }
        }
    }

    #[test]
    fn metric_is_j_invariant(eps in -0.2f64..0.2, p in point(4), x in point(4), y in point(4)) {
        let j = AlmostComplexStructure::sheared(2, eps);
        let g = HermitianMetric::induced(&j);
        let m = j.eval(&p);
        let (jx, jy) = (&m * DVector::from_vec(x.clone()), &m * DVector::from_vec(y.clone()));
        let lhs = g.g(&p, jx.as_slice(), jy.as_slice());
        prop_assert!((lhs - g.g(&p, &x, &y)).abs() <= 1e-12);
    }
}

#[test]
fn sheared_defect_grows_with_epsilon() {
    let samples: Vec<Vec<f64>> = (0..12)
        .map(|k| {
            let t = k as f64 * 0.5;
            vec![0.6 * t.cos(), 0.3 * t.sin(), -0.4 * (2.0 * t).sin(), 0.5 * (3.0 * t).cos()]
        })
        .collect();
    let mut last = -1.0;
    for eps in [0.0, 0.025, 0.05, 0.1] {
        let j = AlmostComplexStructure::sheared(2, eps);
        let d = integrability_defect(&Frame::with_seeds(&j, vec![0, 2], 1e-3).unwrap(), &samples).unwrap();
        assert!(d >= last, "eps {eps}: {d} < {last}");
        last = d;
    }
    let st = AlmostComplexStructure::standard(2);
    let d0 = integrability_defect(&Frame::with_seeds(&st, vec![0, 2], 1e-3).unwrap(), &samples).unwrap();
    assert!(d0 <= 1e-10);
}

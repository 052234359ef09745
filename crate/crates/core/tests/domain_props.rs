use acma::domain::{build_barriers, grid_build, m_rho, DefiningFunction, PointClass};
use acma::field::ScalarField;
use acma::geometry::{AlmostComplexStructure, BoundingBox};
use acma::operator::psh_classify;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn m_rho_scales_inversely(c in 0.05f64..20.0, eps in 0.0f64..0.1) {
        let j = AlmostComplexStructure::sheared(2, eps);
        let dom = grid_build(&DefiningFunction::Ball, &BoundingBox::cube(4, 1.25), 0.25, &j).unwrap();
        let m = m_rho(&dom, dom.rho()).unwrap();
        let mc = m_rho(&dom, &dom.rho().map(|r| c * r)).unwrap();
        prop_assert!((mc - m / c).abs() <= 1e-12 * (m / c));
    }

    #[test]
    fn classification_is_stable_under_refinement(n in 1usize..=2, half in 1.3f64..1.55) {
        let j = AlmostComplexStructure::standard(n);
        let bbox = BoundingBox::cube(2 * n, half);
        let h = if n == 1 { 0.125 } else { 0.25 };
        let coarse = grid_build(&DefiningFunction::Ball, &bbox, h, &j).unwrap();
        let fine = grid_build(&DefiningFunction::Ball, &bbox, h / 2.0, &j).unwrap();
        let inside = |c: PointClass| c == PointClass::Interior;
        for i in 0..coarse.grid().len() {
            let p = coarse.grid().point(i);
            let Some(k) = fine.grid().locate(&p) else { continue };
            if inside(coarse.class(i)) != inside(fine.class(k)) {
                let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!((r - 1.0).abs() <= h + 1e-12, "changed at distance {}", (r - 1.0).abs());
            }
        }
    }

    #[test]
    fn barriers_are_ordered_and_lower_is_psh(a in -1.0f64..1.0, b in -1.0f64..1.0, fval in 0.0f64..2.0) {
        let j = AlmostComplexStructure::sheared(2, 0.05);
        let dom = grid_build(&DefiningFunction::Ball, &BoundingBox::cube(4, 1.25), 0.25, &j).unwrap();
        let g = dom.grid().clone();
        let phi = ScalarField::from_fn(g.clone(), &move |p: &[f64]| a * p[0] + b * p[1] * p[2]);
        let f = ScalarField::filled(g, fval);
        let bp = build_barriers(&dom, &phi, &f).unwrap();
        for &i in dom.interior() {
            prop_assert!(bp.lower.get(i) <= bp.upper.get(i));
        }
        let rep = psh_classify(&bp.lower, dom.operator(), None);
        prop_assert!(rep.margin >= -1e-8, "margin {}", rep.margin);
    }
}

#[test]
fn ellipsoid_m_rho_matches_axes() {
    // rho = |z1|^2 / 4 + |z2|^2 - 1 has complex Hessian diag(1/4, 1).
    let j = AlmostComplexStructure::standard(2);
    let dom = grid_build(
        &DefiningFunction::Ellipsoid(vec![2.0, 1.0]),
        &BoundingBox::new(vec![-2.5, -2.5, -1.5, -1.5], vec![2.5, 2.5, 1.5, 1.5]),
        0.25,
        &j,
    )
    .unwrap();
    let m = m_rho(&dom, dom.rho()).unwrap();
    assert!((m - 4.0).abs() < 1e-10, "m = {m}");
    let rho: &ScalarField = dom.rho();
    assert!(rho.values().iter().all(|v| v.is_finite()));
}

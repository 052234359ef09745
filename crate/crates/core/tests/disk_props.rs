use acma::disks::*;
use acma::geometry::{AlmostComplexStructure, Frame, ANALYTIC_FRAME_STEP};
use num_complex::Complex64;
use proptest::prelude::*;

fn sq(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum()
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
    v.into_iter().map(|x| x / n).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jets_are_met(eps in 0.0f64..0.1, c in prop::collection::vec(-0.5f64..0.5, 4), v in prop::collection::vec(-1.0f64..1.0, 4)) {
        let j = AlmostComplexStructure::sheared(2, eps);
        let v = unit(v);
        let disk = make_disk(&j, &c, std::slice::from_ref(&v), &DiskOptions::default()).unwrap();
        prop_assert!(disk.residual <= 1e-8);
        let z = Complex64::new(0.0, 0.0);
        prop_assert_eq!(disk.eval(z), c);
        let (dx, _) = disk.derivatives(z);
        for a in 0..4 {
            prop_assert!((dx[a] - v[a]).abs() <= 1e-8);
        }
    }

    #[test]
    fn probe_agrees_with_hessian(
        eps in 0.0f64..0.1,
        c in prop::collection::vec(-0.4f64..0.4, 4),
        v in prop::collection::vec(-1.0f64..1.0, 4),
        k in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let j = AlmostComplexStructure::sheared(2, eps);
        let frame = Frame::with_seeds(&j, vec![0, 2], ANALYTIC_FRAME_STEP).unwrap();
        let disk = make_disk(&j, &c, &[unit(v)], &DiskOptions::default()).unwrap();
        let u = move |p: &[f64]| sq(p) + k[0] * p[0].powi(3) + k[1] * (p[1] * p[2]).sin() + k[2] * (p[3]).exp();
        let h = 1e-3;
        let lap = disk_laplacian_probe(&u, &disk).unwrap();
        let form = hessian_form(&u, &frame, &disk, h).unwrap();
        let scale = 1.0 + lap.abs();
        prop_assert!((lap - form).abs() <= 10.0 * (h * h + 1e-8) * scale, "{} vs {}", lap, form);
    }
}

#[test]
fn contraction_grows_with_epsilon() {
    let c = [0.3, -0.1, 0.2, 0.1];
    let v = unit(vec![0.6, 0.2, -0.3, 0.5]);
    let opts = DiskOptions { radius: 0.2, ..DiskOptions::default() };
    let mut last = 0.0;
    let mut ratios = Vec::new();
    for eps in [0.0125, 0.025, 0.05, 0.1] {
        let disk = make_disk(&AlmostComplexStructure::sheared(2, eps), &c, std::slice::from_ref(&v), &opts).unwrap();
        assert!(disk.residual <= 1e-8);
        assert!(disk.contraction >= last, "eps {eps}: {} < {last}", disk.contraction);
        last = disk.contraction;
        ratios.push(disk.contraction / eps);
    }
    // Contraction factor is O(eps).
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi <= 4.0 * lo, "{ratios:?}");
}

#[test]
fn disk_depends_smoothly_on_centre() {
    let j = AlmostComplexStructure::sheared(2, 0.05);
    let v = unit(vec![0.4, 0.1, 0.8, -0.3]);
    let dir = [0.3, -0.5, 0.2, 0.6];
    let base = [0.2, 0.1, -0.2, 0.0];
    let w = Complex64::new(0.04, -0.06);
    let at = |t: f64| {
        let c: Vec<f64> = base.iter().zip(&dir).map(|(b, d)| b + t * d).collect();
        make_disk(&j, &c, std::slice::from_ref(&v), &DiskOptions::default()).unwrap().eval(w)
    };
    let deriv = |s: f64| -> Vec<f64> {
        let (p, m) = (at(s), at(-s));
        p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * s)).collect()
    };
    let ds: Vec<Vec<f64>> = [0.04, 0.02, 0.01].iter().map(|&s| deriv(s)).collect();
    let gap = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let (e1, e2) = (gap(&ds[0], &ds[1]), gap(&ds[1], &ds[2]));
    assert!(ds[2].iter().all(|x| x.abs() < 10.0));
    assert!(e2 <= 0.5 * e1 + 1e-9, "{e1} {e2}");
}

#[test]
fn disk_margin_sign_matches_grid_classification() {
    use acma::domain::{grid_build, DefiningFunction};
    use acma::field::ScalarField;
    use acma::geometry::BoundingBox;
    use acma::operator::psh_classify;
    use rand::SeedableRng;

    let j = AlmostComplexStructure::sheared(2, 0.05);
    let dom = grid_build(&DefiningFunction::Ball, &BoundingBox::cube(4, 1.25), 0.25, &j).unwrap();
    let frame = Frame::with_seeds(&j, dom.frame().seeds().to_vec(), ANALYTIC_FRAME_STEP).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let fields: [fn(&[f64]) -> f64; 3] =
        [|p| sq(p) + 0.1 * p[0].powi(4), |p| p[0] * p[0] + p[1] * p[1] - p[2] * p[2] - p[3] * p[3], |p| -sq(p)];
    for f in fields {
        let grid_margin = psh_classify(&ScalarField::from_fn(dom.grid().clone(), &f), dom.operator(), None).margin;
        let disk = psh_check_disks(&f, &frame, &[0.1, 0.0, -0.1, 0.2], 16, &DiskOptions::default(), &mut rng).unwrap();
        assert_eq!(grid_margin > 0.0, disk.margin > 0.0, "{grid_margin} vs {}", disk.margin);
    }
}

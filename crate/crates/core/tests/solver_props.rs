use std::sync::Arc;

use acma::domain::{grid_build, DefiningFunction, GridDomain};
use acma::field::SharedFn;
use acma::geometry::{AlmostComplexStructure, BoundingBox};
use acma::solver::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn ball(j: &AlmostComplexStructure, h: f64) -> Arc<GridDomain> {
    Arc::new(grid_build(&DefiningFunction::Ball, &BoundingBox::cube(j.dim(), 1.25), h, j).unwrap())
}

fn solve(dom: &Arc<GridDomain>, f: impl Fn(&[f64]) -> f64 + Send + Sync, phi: SharedFn) -> (MAProblem, Solution) {
    let p = MAProblem::from_fns(dom.clone(), &f, phi).unwrap();
    let s = solve_dirichlet(&p, &SolverConfig::default()).unwrap();
    (p, s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn solution_is_monotone_in_f(f2 in 0.2f64..1.5, bump in 0.0f64..1.0, a in -0.5f64..0.5) {
        let dom = ball(&AlmostComplexStructure::sheared(2, 0.05), 0.25);
        let phi: SharedFn = Arc::new(move |p: &[f64]| a * p[0] + 0.2 * p[2] * p[2]);
        let (_, s1) = solve(&dom, move |p: &[f64]| f2 + bump * (1.0 + p[1]).powi(2), phi.clone());
        let (_, s2) = solve(&dom, move |_: &[f64]| f2, phi);
        let r = comparison_check(&dom, &s1.u, &s2.u, 1e-8);
        prop_assert_eq!(r.verdict, ComparisonVerdict::Holds, "{:?}", r);
    }

    #[test]
    fn solution_is_monotone_in_phi(shift in 0.0f64..0.5, a in -0.5f64..0.5, b in -0.5f64..0.5) {
        let dom = ball(&AlmostComplexStructure::sheared(2, 0.05), 0.25);
        let phi1: SharedFn = Arc::new(move |p: &[f64]| a * p[0] + b * p[3]);
        let phi2: SharedFn = Arc::new(move |p: &[f64]| a * p[0] + b * p[3] + shift * (1.0 + p[1]) * (1.0 + p[1]));
        let (_, s1) = solve(&dom, |_: &[f64]| 1.0, phi1);
        let (_, s2) = solve(&dom, |_: &[f64]| 1.0, phi2);
        let tau = sandwich_tolerance(1e-8, dom.h(), 1.0 + shift * 4.0);
        let excess = dom.interior().iter().map(|&i| s1.u.get(i) - s2.u.get(i)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(excess <= tau, "excess {}", excess);
    }

    #[test]
    fn damping_caps_do_not_change_the_solution(cap in 0.1f64..0.9, c in 0.5f64..2.0) {
        let dom = ball(&AlmostComplexStructure::sheared(2, 0.05), 0.25);
        let phi: SharedFn = Arc::new(|p: &[f64]| 0.3 * p[0] - 0.1 * p[1] * p[2]);
        let p = MAProblem::from_fns(dom.clone(), &move |x: &[f64]| c + 0.3 * x[0], phi).unwrap();
        let cfg = SolverConfig::default();
        let a = solve_dirichlet(&p, &cfg).unwrap();
        let capped = SolverConfig { damping_caps: vec![cap, cap.sqrt()], ..cfg.clone() };
        let b = solve_dirichlet(&p, &capped).unwrap();
        prop_assert!(max_interior_diff(&dom, &a.u, &b.u) <= 10.0 * cfg.tol);
    }
}

#[test]
fn newton_history_is_safeguarded() {
    let dom = ball(&AlmostComplexStructure::sheared(2, 0.1), 0.25);
    let (p, s) = solve(&dom, |x: &[f64]| 1.0 + 0.5 * x[0] * x[0], Arc::new(|x: &[f64]| 0.2 * x[1]));
    let d = &s.diagnostics;
    assert!(d.converged);
    for w in d.log_residual_history.windows(2) {
        assert!(w[1] < w[0], "{:?}", d.log_residual_history);
    }
    assert!(d.margin_history.iter().all(|m| *m > 0.0));
    assert!(d.psh_margin >= -1e-8);
    let rep = estimate_report(&s, &p, 1e-8).unwrap();
    assert!(rep.uniform_bound_holds && rep.barrier_holds, "{rep:?}");
}

#[test]
fn identical_runs_have_identical_diagnostics() {
    let dom = ball(&AlmostComplexStructure::sheared(2, 0.05), 0.25);
    let run = || {
        let (_, s) = solve(&dom, |x: &[f64]| 1.0 + x[0] * x[0], Arc::new(|x: &[f64]| x[2]));
        (serde_json::to_string(&s.diagnostics).unwrap(), s.u)
    };
    let (d1, u1) = run();
    let (d2, u2) = run();
    assert_eq!(d1, d2);
    assert!(u1.values().iter().zip(u2.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
}

/// With n = 1 the equation is `Delta u / 4 = f`: assemble the five-point
/// system over interior nodes, with band values from the ghost rules, and
/// solve it by dense LU.
fn direct_linear_solve(dom: &GridDomain, f: &dyn Fn(&[f64]) -> f64, phi: &SharedFn) -> Vec<f64> {
    let g = dom.grid();
    let h2 = g.h() * g.h();
    let interior = dom.interior();
    let m = interior.len();
    let consts = dom.ghost_constants(phi.as_ref());
    let quarter_lap = |u: &acma::field::ScalarField, i: usize| -> f64 {
        let mut s = -4.0 * u.get(i);
        for off in [[1, 0], [-1, 0], [0, 1], [0, -1]] {
            s += u.get(g.offset(i, &off).unwrap());
        }
        0.25 * s / h2
    };
    let zero = vec![0.0; m];
    let base = dom.assemble_field(&zero, &consts);
    let rhs = DVector::from_iterator(m, interior.iter().map(|&i| f(&g.point(i)) - quarter_lap(&base, i)));
    let homogeneous = vec![0.0; consts.len()];
    let mut mat = DMatrix::zeros(m, m);
    let mut e = vec![0.0; m];
    for k in 0..m {
        e[k] = 1.0;
        let col = dom.assemble_field(&e, &homogeneous);
        for (r, &i) in interior.iter().enumerate() {
            mat[(r, k)] = quarter_lap(&col, i);
        }
        e[k] = 0.0;
    }
    mat.lu().solve(&rhs).unwrap().iter().copied().collect()
}

#[test]
fn n1_matches_direct_linear_solve() {
    let j = AlmostComplexStructure::standard(1);
    for h in [0.125, 0.0625] {
        let dom = ball(&j, h);
        let f = |p: &[f64]| 1.0 + 0.5 * p[0] + 0.25 * p[1] * p[1];
        let phi: SharedFn = Arc::new(|p: &[f64]| (p[0] * 1.3).sin() + p[1] * p[1] * p[0]);
        let (_, s) = solve(&dom, f, phi.clone());
        let direct = direct_linear_solve(&dom, &f, &phi);
        let err = dom.interior().iter().zip(&direct).map(|(&i, d)| (s.u.get(i) - d).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-10, "h = {h}: {err}");
    }
}

#[test]
fn parallel_switch_does_not_change_bits() {
    let dom = ball(&AlmostComplexStructure::sheared(2, 0.05), 0.25);
    let run = || solve(&dom, |x: &[f64]| 1.0 + 0.3 * x[1] * x[1], Arc::new(|x: &[f64]| 0.2 * x[0] * x[3])).1;
    let a = run();
    acma::par::set_parallel(false);
    let b = run();
    acma::par::set_parallel(true);
    assert_eq!(serde_json::to_string(&a.diagnostics).unwrap(), serde_json::to_string(&b.diagnostics).unwrap());
    assert!(a.u.values().iter().zip(b.u.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
}

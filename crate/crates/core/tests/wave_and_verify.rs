use num_complex::Complex64;
use relprop_core::baeumer::{baeumer_closed, baeumer_integral_inner};
use relprop_core::quadrature::QuadratureConfig;
use relprop_core::salpeter::PropagatorQuery;
use relprop_core::verify::{
    check_klein_gordon, check_scaling, check_wick, cross_validate, hankel_calibration, run_suite, CrossGrid, Suite,
    SuiteOptions,
};
use relprop_core::wavefunc::{default_grid, evolve, evolve_point, initial_cosine_bump, total_probability, GridSpec};

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

#[test]
fn initial_bump_is_normalized() {
    let s = evolve(1.0, 0.0, 1.0, &GridSpec { x_min: -1.0, x_max: 1.0, n_points: 4001 }, &cfg()).unwrap();
    assert!((total_probability(&s) - 1.0).abs() < 1e-6);
    let psi = initial_cosine_bump(0.5);
    assert!((psi(0.0) - 2.0).abs() < 1e-15);
    assert_eq!(psi(0.3), 0.0);
}

#[test]
fn tiny_time_is_nearly_identity() {
    let t = 1e-8;
    let grid = GridSpec { x_min: -1.0, x_max: 1.0, n_points: 81 };
    let s = evolve(1.0, t, 1.0, &grid, &cfg()).unwrap();
    let psi0 = initial_cosine_bump(1.0);
    for (x, a) in grid.nodes().iter().zip(&s.amplitudes) {
        assert!((a - Complex64::new(psi0(*x), 0.0)).norm() < 1e-6, "x={x}: {a}");
    }
}

#[test]
fn continuous_across_the_cone() {
    for m in [0.0, 1.0] {
        let (delta, t) = (1.0, 2.0);
        let s = evolve(delta, t, m, &default_grid(delta, t, m), &cfg()).unwrap();
        let peak = s.amplitudes.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let d = 1e-6;
        for x in [t, -t] {
            let lo = evolve_point(x - d, delta, t, m, &cfg()).unwrap();
            let hi = evolve_point(x + d, delta, t, m, &cfg()).unwrap();
            assert!(lo.norm().is_finite() && hi.norm().is_finite());
            assert!((hi - lo).norm() < 1e-3 * peak, "m={m} x={x}: jump {}", (hi - lo).norm());
        }
    }
}

#[test]
fn residue_rule_dominates_for_narrow_pulse() {
    // on the cone the half-residue carries e^{imt}, with no phase at m = 0
    let delta = 1e-3;
    let t = 1.0;
    let psi0 = initial_cosine_bump(delta)(0.0);
    for m in [0.0, 1.0] {
        let v = evolve_point(t, delta, t, m, &cfg()).unwrap();
        let expected = 0.5 * psi0 * Complex64::from_polar(1.0, m * t);
        let ratio = v / expected;
        assert!((ratio - 1.0).norm() < 3e-3, "m={m}: ratio {ratio}");
    }
}

#[test]
fn pulse_splits_in_two() {
    let (delta, t) = (1.0, 10.0);
    for m in [0.0, 1.0] {
        let grid = default_grid(delta, t, m);
        let s = evolve(delta, t, m, &grid, &cfg()).unwrap();
        let p: Vec<f64> = s.amplitudes.iter().map(|a| a.norm_sqr()).collect();
        let xs = grid.nodes();
        let maxima: Vec<f64> = (1..p.len() - 1).filter(|&i| p[i] > p[i - 1] && p[i] > p[i + 1]).map(|i| xs[i]).collect();
        assert_eq!(maxima.len(), 2, "m={m}: maxima at {maxima:?}");
        assert!(maxima.iter().all(|x| (x.abs() - t).abs() < 1.0), "m={m}: {maxima:?}");
    }
}

#[test]
fn probability_insensitive_to_quadrature_tolerance() {
    let (delta, t, m) = (1.0, 1.0, 1.0);
    let grid = default_grid(delta, t, m);
    let loose = total_probability(&evolve(delta, t, m, &grid, &cfg()).unwrap());
    let tight_cfg = QuadratureConfig { abs_tol: 1e-13, rel_tol: 1e-11, ..Default::default() };
    let tight = total_probability(&evolve(delta, t, m, &grid, &tight_cfg).unwrap());
    assert!((loose - tight).abs() < 1e-6, "{loose} vs {tight}");
    assert!((tight - 1.0).abs() < 4e-5);
}

#[test]
fn deep_tail_inner_integral_is_not_silently_wrong() {
    // at x = 50, t = 1 the closed form is ~1e-22 while single panels are
    // ~1e-2; the quadrature must either agree or report non-convergence
    let q = PropagatorQuery::new(50.0, 1.0, 1.0).unwrap();
    let c = baeumer_closed(&q).unwrap();
    match baeumer_integral_inner(&q, &cfg()) {
        Ok(r) => assert!((r.value.re - c).abs() <= 10.0 * r.error_estimate.max(1e-6 * c)),
        Err(e) => assert!(e.partial().is_some(), "{e}"),
    }
}

#[test]
fn scaling_examples() {
    let r = check_scaling(1.0, 2.0, &[(0.5, 1.0)], 0.0);
    assert!(r.passed() && r.worst_deviation <= 1e-9);
    let r = check_scaling(0.5, 10.0, &[(3.0, 1.0)], 0.0);
    assert!(r.passed() && r.worst_deviation <= 1e-9);
    let r = check_scaling(0.5, 1.0, &[(3.0, 1.0), (0.2, 1.0)], 0.0);
    assert_eq!(r.worst_deviation, 0.0);
}

#[test]
fn wick_example() {
    let r = check_wick(&[(2.0, 1.0, 1.0), (2.0, 1.0, 0.0)], &cfg(), 0.0);
    assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
}

#[test]
fn klein_gordon_example() {
    let r = check_klein_gordon(&[(0.4, 1.0)], 1.0, &[1e-2, 5e-3, 2.5e-3], 0.0);
    assert!(r.passed());
    let r = check_klein_gordon(&[(0.4, 1.0)], 0.0, &[1e-2, 5e-3, 2.5e-3], 0.0);
    assert!(r.passed());
}

#[test]
fn cross_examples_closed_vs_integral() {
    let grid = CrossGrid { x_points: 26, ..Default::default() };
    let r = cross_validate(&grid, &[0.0, 1.0], &cfg(), 0.0);
    let closed: Vec<_> = r.cases.iter().filter(|c| !c.label.contains("series")).collect();
    assert!(!closed.is_empty());
    assert!(closed.iter().all(|c| c.passed), "{:?}", closed.iter().find(|c| !c.passed));
    assert_eq!(hankel_calibration(&cfg()).unwrap(), -1.0);
}

#[test]
fn reports_are_reproducible() {
    let opts = SuiteOptions::default();
    let a = run_suite(Suite::Wick, &opts).unwrap();
    let b = run_suite(Suite::Wick, &opts).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    assert_eq!(a.sign_calibrations.get("baeumer_outer"), Some(&1.0));
}

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use relprop_core::baeumer::baeumer_closed;
use relprop_core::quadrature::{integrate_finite, principal_value, QuadratureConfig};
use relprop_core::salpeter::{salpeter_closed, salpeter_closed_imaginary_time, PropagatorQuery};
use relprop_core::series::series_propagator;
use relprop_core::specfun::{bessel_k1, expint_en, f_n, k1_via_hankel};
use relprop_core::wavefunc::{evolve, GridSpec};

fn q(x: f64, t: f64, m: f64) -> PropagatorQuery {
    PropagatorQuery::new(x, t, m).unwrap()
}

fn off_cone(x: f64, t: f64) -> bool {
    (x.abs() - t).abs() > 0.02 * t
}

fn f_n_explicit(n: u32, r: f64) -> f64 {
    let (s, c) = r.sin_cos();
    match n {
        0 => s / r,
        1 => (r * s + c - 1.0) / r.powi(2),
        2 => (r * r * s + 2.0 * r * c - 2.0 * s) / r.powi(3),
        3 => (r.powi(3) * s + 3.0 * r * r * c - 6.0 * r * s - 6.0 * c + 6.0) / r.powi(4),
        4 => (r.powi(4) * s + 4.0 * r.powi(3) * c - 12.0 * r * r * s - 24.0 * r * c + 24.0 * s) / r.powi(5),
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn propagators_are_even(x in 0.0..6.0f64, t in 0.05..4.0f64, m in 0.0..3.0f64) {
        prop_assume!(off_cone(x, t));
        prop_assert_eq!(salpeter_closed(&q(x, t, m)).unwrap(), salpeter_closed(&q(-x, t, m)).unwrap());
        prop_assert_eq!(baeumer_closed(&q(x, t, m)).unwrap(), baeumer_closed(&q(-x, t, m)).unwrap());
        if m > 0.01 {
            prop_assert_eq!(series_propagator(x, t, m, 6).unwrap(), series_propagator(-x, t, m, 6).unwrap());
        }
    }

    #[test]
    fn scaling_symmetry(x in 0.0..5.0f64, t in 0.05..5.0f64, m in 0.05..3.0f64, lambda in 0.5..10.0f64) {
        prop_assume!(off_cone(x, t));
        let a = salpeter_closed(&q(lambda * x, lambda * t, m)).unwrap();
        let b = salpeter_closed(&q(x, t, lambda * m)).unwrap() / lambda;
        prop_assert!((a - b).norm() <= 1e-9 * b.norm(), "{} vs {}", a, b);
        let a = baeumer_closed(&q(lambda * x, lambda * t, m)).unwrap();
        let b = baeumer_closed(&q(x, t, lambda * m)).unwrap() / lambda;
        prop_assert!((a - b).abs() <= 1e-9 * b, "{} vs {}", a, b);
    }

    #[test]
    fn diffusion_kernel_is_positive(x in -200.0..200.0f64, t in 1e-3..1e3f64, m in 0.0..5.0f64) {
        let g = baeumer_closed(&q(x, t, m)).unwrap();
        // far tails may underflow to zero but never go negative
        prop_assert!(g >= 0.0);
        if m * (x.abs() - t) < 600.0 {
            prop_assert!(g > 0.0);
        }
    }

    #[test]
    fn wick_bridge_of_closed_forms(x in 0.0..10.0f64, t in 0.01..10.0f64, m in 0.0..4.0f64) {
        let b = baeumer_closed(&q(x, t, m)).unwrap();
        let s = salpeter_closed_imaginary_time(x, t, m).unwrap();
        prop_assert!((s - Complex64::new(b, 0.0)).norm() <= 1e-12 * b.max(1e-300), "{} vs {}", s, b);
    }

    #[test]
    fn massless_limit_is_continuous(x in 0.0..5.0f64, t in 0.1..3.0f64) {
        prop_assume!((x - t).abs() > 0.1 * t);
        let a = salpeter_closed(&q(x, t, 1e-8)).unwrap();
        let b = salpeter_closed(&q(x, t, 0.0)).unwrap();
        prop_assert!((a - b).norm() <= 1e-5 * b.norm());
    }

    #[test]
    fn k1_hankel_bridge(y in 1e-3..10.0f64) {
        let k = bessel_k1(y).unwrap();
        prop_assert!((k1_via_hankel(y).unwrap() - k).abs() <= 1e-9 * k);
    }

    #[test]
    fn expint_recurrence(n in 1u32..=8, re in 0.0..20.0f64, im in -20.0..20.0f64) {
        let z = Complex64::new(re, im);
        prop_assume!(z.norm() > 0.05);
        let lhs = expint_en(n + 1, z).unwrap() * n as f64;
        let rhs = (-z).exp() - z * expint_en(n, z).unwrap();
        let scale = (-z).exp().norm();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * scale.max(lhs.norm()), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn f_n_matches_trig_forms(n in 0u32..=4, rho in 0.1..15.0f64) {
        let a = f_n(n, rho).unwrap();
        let b = f_n_explicit(n, rho);
        prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-3), "{} vs {}", a, b);
    }

    #[test]
    fn large_rho_f_n(n in 0u32..=6, rho in 50.0..400.0f64) {
        prop_assume!(rho.sin().abs() > 0.3);
        let a = f_n(n, rho).unwrap() * rho / rho.sin();
        // next order is cos(rho)/(rho sin(rho)) times n
        prop_assert!((a - 1.0).abs() <= (n as f64 + 1.0) * 4.0 / rho);
    }

    #[test]
    fn quadrature_is_linear(alpha in -3.0..3.0f64, beta in -3.0..3.0f64, k in 0.5..6.0f64, b in 0.5..4.0f64) {
        let cfg = QuadratureConfig::default();
        let f = |x: f64| Complex64::new((k * x).cos(), x * x);
        let g = |x: f64| Complex64::new((-x).exp(), (k * x).sin());
        let i_f = integrate_finite(f, 0.0, b, &cfg).unwrap();
        let i_g = integrate_finite(g, 0.0, b, &cfg).unwrap();
        let i_h = integrate_finite(|x| alpha * f(x) + beta * g(x), 0.0, b, &cfg).unwrap();
        let err = alpha.abs() * i_f.error_estimate + beta.abs() * i_g.error_estimate + i_h.error_estimate;
        let diff = (i_h.value - (alpha * i_f.value + beta * i_g.value)).norm();
        prop_assert!(diff <= err + 1e-14 * (1.0 + i_h.value.norm()));
    }

    #[test]
    fn principal_value_of_even_numerator(k in 0.0..5.0f64, a in 0.3..2.0f64, c in 0.5..3.0f64) {
        let cfg = QuadratureConfig::default();
        let h = move |y: f64| (k * y).cos() + y * y;
        let pv = principal_value(|y| Complex64::new(h(y) / y, 0.0), &[0.0], -a, a, &cfg).unwrap();
        prop_assert!(pv.value.norm() < 1e-9);
        // on [-a, a + c] only the unbalanced piece survives
        let pv = principal_value(|y| Complex64::new(h(y) / y, 0.0), &[0.0], -a, a + c, &cfg).unwrap();
        let rest = integrate_finite(|y| Complex64::new(h(y) / y, 0.0), a, a + c, &cfg).unwrap();
        prop_assert!((pv.value - rest.value).norm() < 1e-8 * (1.0 + rest.value.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn evolved_state_has_exact_parity(t in 0.2..2.0f64, m in 0.0..2.0f64) {
        let grid = GridSpec { x_min: -(t + 3.0), x_max: t + 3.0, n_points: 121 };
        let s = evolve(1.0, t, m, &grid, &QuadratureConfig::default()).unwrap();
        let n = s.amplitudes.len();
        for i in 0..n {
            prop_assert_eq!(s.amplitudes[i], s.amplitudes[n - 1 - i]);
        }
    }
}

#[test]
fn cauchy_peak() {
    assert!((baeumer_closed(&q(0.0, 1.0, 0.0)).unwrap() - 1.0 / PI).abs() < 1e-16);
}

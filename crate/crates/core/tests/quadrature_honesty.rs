//! Reported error estimates against true errors on integrals with known values.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use relprop_core::quadrature::{
    integrate_finite, integrate_oscillatory_cos, integrate_semi_infinite_decaying, QuadratureConfig,
    QuadratureResult,
};
use relprop_core::Result;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

type Case = (&'static str, Box<dyn Fn(&QuadratureConfig) -> Result<QuadratureResult>>, Complex64);

fn battery() -> Vec<Case> {
    vec![
        ("x^2", Box::new(|cfg| integrate_finite(|x| c(x * x), 0.0, 1.0, cfg)), c(1.0 / 3.0)),
        ("exp", Box::new(|cfg| integrate_finite(|x| c(x.exp()), 0.0, 1.0, cfg)), c(E - 1.0)),
        ("lorentz", Box::new(|cfg| integrate_finite(|x| c(1.0 / (1.0 + x * x)), 0.0, 1.0, cfg)), c(PI / 4.0)),
        ("sqrt", Box::new(|cfg| integrate_finite(|x| c(x.sqrt()), 0.0, 1.0, cfg)), c(2.0 / 3.0)),
        ("log", Box::new(|cfg| integrate_finite(|x| c(x.ln()), 0.0, 1.0, cfg)), c(-1.0)),
        ("inv sqrt", Box::new(|cfg| integrate_finite(|x| c(1.0 / x.sqrt()), 0.0, 1.0, cfg)), c(2.0)),
        ("sin 50x", Box::new(|cfg| integrate_finite(|x| c((50.0 * x).sin()), 0.0, 1.0, cfg)), c((1.0 - 50f64.cos()) / 50.0)),
        ("e^{ix}", Box::new(|cfg| integrate_finite(|x| Complex64::from_polar(1.0, x), 0.0, PI, cfg)), Complex64::new(0.0, 2.0)),
        ("kink", Box::new(|cfg| integrate_finite(|x| c((x - 1.0 / 3.0).abs()), 0.0, 1.0, cfg)), c(5.0 / 18.0)),
        ("runge", Box::new(|cfg| integrate_finite(|x| c(1.0 / (1.0 + 25.0 * x * x)), -1.0, 1.0, cfg)), c(0.4 * 5f64.atan())),
        ("gauss", Box::new(|cfg| integrate_finite(|x| c((-x * x).exp()), 0.0, 10.0, cfg)), c(PI.sqrt() / 2.0)),
        ("e^-q", Box::new(|cfg| integrate_semi_infinite_decaying(|q| c((-q).exp()), 0.0, 1.0, cfg)), c(1.0)),
        ("e^-2q cos q", Box::new(|cfg| integrate_semi_infinite_decaying(|q| c((-2.0 * q).exp() * q.cos()), 0.0, 2.0, cfg)), c(0.4)),
        ("q e^-q", Box::new(|cfg| integrate_semi_infinite_decaying(|q| c(q * (-q).exp()), 0.0, 1.0, cfg)), c(1.0)),
        ("q^2 e^-3q", Box::new(|cfg| integrate_semi_infinite_decaying(|q| c(q * q * (-3.0 * q).exp()), 0.0, 3.0, cfg)), c(2.0 / 27.0)),
        ("e^-q sin q", Box::new(|cfg| integrate_semi_infinite_decaying(|q| c((-q).exp() * q.sin()), 0.0, 1.0, cfg)), c(0.5)),
        ("cos 5p e^-p", Box::new(|cfg| integrate_oscillatory_cos(|p: f64| (-p).exp(), 5.0, 0.0, cfg)), c(1.0 / 26.0)),
        ("cos p/(1+p^2)", Box::new(|cfg| integrate_oscillatory_cos(|p: f64| 1.0 / (1.0 + p * p), 1.0, 0.0, cfg)), c(PI / (2.0 * E))),
        ("cos 2p e^-p^2", Box::new(|cfg| integrate_oscillatory_cos(|p: f64| (-p * p).exp(), 2.0, 0.0, cfg)), c(PI.sqrt() / (2.0 * E))),
        ("cos p/(1+p)", Box::new(|cfg| integrate_oscillatory_cos(|p: f64| 1.0 / (1.0 + p), 1.0, 0.0, cfg)), c(0.3433779615564269)),
    ]
}

#[test]
fn error_estimates_are_honest() {
    let cfg = QuadratureConfig::default();
    let cases = battery();
    assert_eq!(cases.len(), 20);
    let mut honest = 0;
    for (name, run, exact) in &cases {
        let r = run(&cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
        let err = (r.value - exact).norm();
        let ok = err <= 10.0 * r.error_estimate;
        println!("{name:>16}: true {err:.2e}  reported {:.2e}  {}", r.error_estimate, if ok { "ok" } else { "UNDER" });
        assert!(err <= cfg.target(exact.norm()) * 10.0, "{name} misses its tolerance: {err:e}");
        honest += ok as usize;
    }
    assert!(honest >= 19, "only {honest} of 20 estimates bound the true error");
}

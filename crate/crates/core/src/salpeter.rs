//! The Salpeter propagator
//! `G(x, t, m) = (e^{imt}/pi) int_0^inf e^{-i sqrt(m^2+p^2) t} cos(px) dp`.
//!
//! Evaluated in closed form (K1 outside the light cone, H1 inside), by the
//! contour-rotated inner/outer integrals, in the nonrelativistic limit and by
//! its two-term expansion next to the cone.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_finite, integrate_semi_infinite_decaying, QuadratureConfig, QuadratureResult};
use crate::specfun::{bessel_k1_scaled, hankel1_order1};
use crate::ComplexScalar;

/// Queries closer than this (relative to `t`) to `|x| = t` are rejected.
pub const LIGHT_CONE_BAND: f64 = 1e-12;

/// A point `(x, t)` and mass `m`; `x` is stored as `|x|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorQuery {
    pub x: f64,
    pub t: f64,
    pub m: f64,
}

impl PropagatorQuery {
    pub fn new(x: f64, t: f64, m: f64) -> Result<Self> {
        if !(x.is_finite() && t.is_finite() && m.is_finite()) {
            return Err(domain(format!("non-finite query (x={x}, t={t}, m={m})")));
        }
        if !(t > 0.0) {
            return Err(domain(format!("time must be positive, got {t}")));
        }
        if m < 0.0 {
            return Err(domain(format!("mass must be non-negative, got {m}")));
        }
        Ok(PropagatorQuery { x: x.abs(), t, m })
    }

    pub fn on_light_cone(&self) -> bool {
        (self.t - self.x).abs() < LIGHT_CONE_BAND * self.t
    }

    pub fn inside_cone(&self) -> bool {
        self.x < self.t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Salpeter,
    Baeumer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Closed,
    Integral,
    Series,
    Classical,
    Massless,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Salpeter => "salpeter",
            Model::Baeumer => "baeumer",
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Closed => "closed",
            Method::Integral => "integral",
            Method::Series => "series",
            Method::Classical => "classical",
            Method::Massless => "massless",
        })
    }
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "salpeter" => Ok(Model::Salpeter),
            "baeumer" => Ok(Model::Baeumer),
            _ => Err(domain(format!("unknown model '{s}'"))),
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" => Ok(Method::Closed),
            "integral" => Ok(Method::Integral),
            "series" => Ok(Method::Series),
            "classical" => Ok(Method::Classical),
            "massless" => Ok(Method::Massless),
            _ => Err(domain(format!("unknown method '{s}'"))),
        }
    }
}

/// One evaluated propagator value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorSample {
    pub query: PropagatorQuery,
    pub model: Model,
    pub method: Method,
    pub value: ComplexScalar,
    pub error_estimate: f64,
}

/// Which Hankel expression is used inside the cone.
///
/// `NegativeArgument` is `H1(1)(-m s)` continued through the upper half
/// plane, i.e. `H1(2)(m s) = conj(H1(1)(m s))`; `PositiveArgument` is
/// `H1(1)(+m s)`. Only the former agrees with the inner integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HankelConvention {
    NegativeArgument,
    PositiveArgument,
}

pub const HANKEL_CONVENTION: HankelConvention = HankelConvention::NegativeArgument;

fn phase(m: f64, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, m * t)
}

/// Exact massless kernel `i t / (pi (x^2 - t^2))`.
pub fn salpeter_massless(q: &PropagatorQuery) -> Result<ComplexScalar> {
    if q.m != 0.0 {
        return Err(domain("massless formula requires m = 0"));
    }
    if q.on_light_cone() {
        return Err(Error::LightConeSingularity { x: q.x, t: q.t });
    }
    Ok(Complex64::new(0.0, q.t / (PI * (q.x - q.t) * (q.x + q.t))))
}

/// Closed form of the propagator.
pub fn salpeter_closed(q: &PropagatorQuery) -> Result<ComplexScalar> {
    salpeter_closed_with(q, HANKEL_CONVENTION)
}

/// Closed form with an explicit choice of the Hankel convention.
pub fn salpeter_closed_with(q: &PropagatorQuery, convention: HankelConvention) -> Result<ComplexScalar> {
    if q.on_light_cone() {
        return Err(Error::LightConeSingularity { x: q.x, t: q.t });
    }
    if q.m == 0.0 {
        return salpeter_massless(q);
    }
    let (x, t, m) = (q.x, q.t, q.m);
    if x > t {
        let r = ((x - t) * (x + t)).sqrt();
        let y = m * r;
        let k1 = bessel_k1_scaled(y)? * (-y).exp();
        Ok(Complex64::i() * phase(m, t) * (m * t * k1 / (PI * r)))
    } else {
        let s = ((t - x) * (t + x)).sqrt();
        let h = hankel1_order1(m * s)?;
        let h = match convention {
            HankelConvention::NegativeArgument => h.conj(),
            HankelConvention::PositiveArgument => h,
        };
        Ok(-phase(m, t) * h * (m * t / (2.0 * s)))
    }
}

/// Closed form at imaginary time `t = -i tau`.
///
/// There `x^2 - t^2 = x^2 + tau^2 > 0`, so the K1 branch applies for every
/// `x` and the result is the diffusion kernel.
pub fn salpeter_closed_imaginary_time(x: f64, tau: f64, m: f64) -> Result<ComplexScalar> {
    if !(tau > 0.0 && tau.is_finite() && x.is_finite() && m >= 0.0 && m.is_finite()) {
        return Err(domain(format!("imaginary-time query needs tau > 0, m >= 0 (x={x}, tau={tau}, m={m})")));
    }
    let t = Complex64::new(0.0, -tau);
    let r = x.hypot(tau);
    let i = Complex64::i();
    if m == 0.0 {
        return Ok(i * t / (PI * r * r));
    }
    let y = m * r;
    let eimt = (i * m * t).exp();
    let k1 = bessel_k1_scaled(y)? * (-y).exp();
    Ok(i * m * t * eimt * (k1 / (PI * r)))
}

/// Inner representation, valid for `|x| < t`:
/// `G = (e^{imt}/(i pi)) [ int_0^m e^{-i sqrt(m^2-q^2) t} cosh(qx) dq
///                       + int_m^inf e^{-sqrt(q^2-m^2) t} cosh(qx) dq ]`.
///
/// The substitutions `q = m sin(th)` and `q = m cosh(s)` remove the square
/// root endpoint behaviour; hyperbolic factors are combined in exponent form.
pub fn salpeter_integral_inner(q: &PropagatorQuery, cfg: &QuadratureConfig) -> Result<QuadratureResult> {
    let (x, t, m) = (q.x, q.t, q.m);
    if x >= t {
        return Err(domain(format!("inner representation needs |x| < t (x={x}, t={t})")));
    }
    let prefactor = phase(m, t) / Complex64::new(0.0, PI);
    if m == 0.0 {
        let r = integrate_semi_infinite_decaying(
            |p| Complex64::new(0.5 * ((-(t - x) * p).exp() + (-(t + x) * p).exp()), 0.0),
            0.0,
            t - x,
            cfg,
        )
        .map_err(|e| e.scale_partial(prefactor))?;
        return Ok(r.scaled(prefactor));
    }
    let lower = integrate_finite(
        |th: f64| {
            let (s, c) = th.sin_cos();
            let u = m * x * s;
            Complex64::from_polar(1.0, -m * t * c) * (0.5 * (u.exp() + (-u).exp()) * m * c)
        },
        0.0,
        0.5 * PI,
        cfg,
    )
    .map_err(|e| e.scale_partial(prefactor))?;
    let upper = integrate_semi_infinite_decaying(
        |s: f64| {
            let (sh, ch) = (s.sinh(), s.cosh());
            let a = -m * t * sh;
            let u = m * x * ch;
            Complex64::new(0.5 * m * sh * ((a + u).exp() + (a - u).exp()), 0.0)
        },
        0.0,
        1.0,
        cfg,
    )
    .map_err(|e| e.scale_partial(prefactor))?;
    let mut total = lower;
    total.value += upper.value;
    total.error_estimate += upper.error_estimate;
    total.evaluations += upper.evaluations;
    Ok(total.scaled(prefactor))
}

/// Outer representation, valid for `|x| > t`:
/// `G = (i e^{imt}/pi) int_m^inf sinh(sqrt(q^2-m^2) t) e^{-qx} dq`.
pub fn salpeter_integral_outer(q: &PropagatorQuery, cfg: &QuadratureConfig) -> Result<QuadratureResult> {
    if q.x <= q.t {
        return Err(domain(format!("outer representation needs |x| > t (x={}, t={})", q.x, q.t)));
    }
    outer_complex_time(q.x, Complex64::new(q.t, 0.0), q.m, cfg)
}

/// Outer representation continued to complex time; `sinh` of the complex
/// argument carries the continuation (at `t = -i tau` it becomes `-i sin`).
pub fn salpeter_integral_outer_complex_time(
    x: f64,
    t: ComplexScalar,
    m: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    let x = x.abs();
    if !(x > t.re.abs()) || !(m >= 0.0) || !(x.is_finite() && t.is_finite() && m.is_finite()) {
        return Err(domain(format!("outer representation needs |x| > |Re t| (x={x}, t={t})")));
    }
    outer_complex_time(x, t, m, cfg)
}

fn sinh_times_exp(arg: Complex64, decay: f64) -> Complex64 {
    // sinh(arg) e^{-decay} without overflow for large |Re arg|.
    if arg.re.abs() < 1.0 {
        arg.sinh() * (-decay).exp()
    } else {
        0.5 * ((arg - decay).exp() - (-arg - decay).exp())
    }
}

fn outer_complex_time(x: f64, t: Complex64, m: f64, cfg: &QuadratureConfig) -> Result<QuadratureResult> {
    let i = Complex64::i();
    let prefactor = i * (i * m * t).exp() / PI;
    let r = if m == 0.0 {
        integrate_semi_infinite_decaying(|p| sinh_times_exp(p * t, p * x), 0.0, x - t.re.abs(), cfg)
    } else {
        integrate_semi_infinite_decaying(
            |s: f64| {
                let (sh, ch) = (s.sinh(), s.cosh());
                sinh_times_exp(m * sh * t, m * x * ch) * (m * sh)
            },
            0.0,
            1.0,
            cfg,
        )
    };
    Ok(r.map_err(|e| e.scale_partial(prefactor))?.scaled(prefactor))
}

/// Inner or outer representation depending on the side of the cone.
pub fn salpeter_integral(q: &PropagatorQuery, cfg: &QuadratureConfig) -> Result<QuadratureResult> {
    if q.on_light_cone() {
        return Err(Error::LightConeSingularity { x: q.x, t: q.t });
    }
    if q.inside_cone() {
        salpeter_integral_inner(q, cfg)
    } else {
        salpeter_integral_outer(q, cfg)
    }
}

/// Nonrelativistic limit `sqrt(m/(2 pi t)) e^{-i pi/4} e^{i m x^2/(2t)}`.
pub fn salpeter_classical(q: &PropagatorQuery) -> Result<ComplexScalar> {
    if q.m == 0.0 {
        return Err(domain("classical limit requires m > 0"));
    }
    let amp = (q.m / (2.0 * PI * q.t)).sqrt();
    Ok(Complex64::from_polar(amp, q.m * q.x * q.x / (2.0 * q.t) - 0.25 * PI))
}

fn check_near_cone(q: &PropagatorQuery) -> Result<f64> {
    let d = q.t - q.x;
    if !(d != 0.0 && d.abs() < 0.1 * q.t) {
        return Err(domain(format!("singular expansion needs 0 < |t - |x|| < 0.1 t (x={}, t={})", q.x, q.t)));
    }
    Ok(d)
}

/// `1/(2i d) + (i m^2 t/4) ln(i m d)`, `d = t - |x|`, in the normalization of
/// `int_0^inf e^{-it sqrt(m^2+p^2)} cos(px) dp` (no `e^{imt}/pi` factor).
pub fn singular_asymptote_raw(q: &PropagatorQuery) -> Result<ComplexScalar> {
    let d = check_near_cone(q)?;
    let i = Complex64::i();
    let pole = 1.0 / (2.0 * i * d);
    if q.m == 0.0 {
        return Ok(pole);
    }
    let log = (i * q.m * d).ln();
    Ok(pole + i * (q.m * q.m * q.t / 4.0) * log)
}

/// Near-cone expansion of the propagator itself: `e^{imt}/pi` times
/// [`singular_asymptote_raw`].
pub fn singular_asymptote(q: &PropagatorQuery) -> Result<ComplexScalar> {
    Ok(singular_asymptote_raw(q)? * phase(q.m, q.t) / PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(x: f64, t: f64, m: f64) -> PropagatorQuery {
        PropagatorQuery::new(x, t, m).unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn query_normalizes_x() {
        assert_eq!(q(-2.0, 1.0, 1.0).x, 2.0);
        assert!(PropagatorQuery::new(0.0, 0.0, 1.0).is_err());
        assert!(PropagatorQuery::new(0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn closed_examples() {
        let g = salpeter_closed(&q(2.0, 1.0, 0.0)).unwrap();
        assert!(g.re.abs() < 1e-17 && (g.im - 1.0 / (3.0 * PI)).abs() < 1e-15);
        let g = salpeter_closed(&q(2.0, 1.0, 1.0)).unwrap();
        assert!(rel(g, Complex64::new(-0.030980820387351643, 0.019892556006306267)) < 1e-13);
        assert!(matches!(salpeter_closed(&q(1.0, 1.0, 1.0)), Err(Error::LightConeSingularity { .. })));
        let g = salpeter_closed(&q(0.5, 1.0, 1.0)).unwrap();
        assert!(rel(g, Complex64::new(0.3178681083949846, -0.4742034645708492)) < 1e-12);
    }

    #[test]
    fn integrals_match_closed() {
        let cfg = QuadratureConfig::default();
        let c = salpeter_closed(&q(0.5, 1.0, 1.0)).unwrap();
        let i = salpeter_integral_inner(&q(0.5, 1.0, 1.0), &cfg).unwrap();
        assert!(rel(i.value, c) < 1e-6);
        let c = salpeter_closed(&q(2.0, 1.0, 1.0)).unwrap();
        let o = salpeter_integral_outer(&q(2.0, 1.0, 1.0), &cfg).unwrap();
        assert!(rel(o.value, c) < 1e-6);
        let o = salpeter_integral_outer(&q(2.0, 1.0, 0.0), &cfg).unwrap();
        assert!(rel(o.value, Complex64::new(0.0, 1.0 / (3.0 * PI))) < 1e-8);
        let i = salpeter_integral_inner(&q(0.5, 1.0, 0.0), &cfg).unwrap();
        assert!(rel(i.value, Complex64::new(0.0, -4.0 / (3.0 * PI))) < 1e-8);
    }

    #[test]
    fn outer_vanishes_linearly_in_t() {
        let cfg = QuadratureConfig { abs_tol: 1e-16, ..Default::default() };
        let a = salpeter_integral_outer(&q(2.0, 1e-3, 1.0), &cfg).unwrap().value.norm();
        let b = salpeter_integral_outer(&q(2.0, 5e-4, 1.0), &cfg).unwrap().value.norm();
        assert!((a / b - 2.0).abs() < 1e-2);
    }

    #[test]
    fn classical_examples() {
        let g = salpeter_classical(&q(0.0, 2.0 * PI, 1.0)).unwrap();
        assert!((g.norm() - 0.5 / PI).abs() < 1e-15);
        assert!((g.arg() + 0.25 * PI).abs() < 1e-15);
        // amplitude 1/2 at t = 2/pi
        let g = salpeter_classical(&q(0.0, 2.0 / PI, 1.0)).unwrap();
        assert!((g.re - 0.35355339059327373).abs() < 1e-12 && (g.im + 0.35355339059327373).abs() < 1e-12);
        assert!(salpeter_classical(&q(0.0, 1.0, 0.0)).is_err());
        let a = salpeter_classical(&q(0.3, 1.0, 2.0)).unwrap().norm();
        let b = salpeter_classical(&q(7.0, 1.0, 2.0)).unwrap().norm();
        assert!((a - b).abs() < 1e-15);
        let g = salpeter_classical(&q(1.0, 100.0, 100.0)).unwrap();
        let c = salpeter_closed(&q(1.0, 100.0, 100.0)).unwrap();
        assert!(rel(g, c) < 1e-3);
    }

    #[test]
    fn singular_examples() {
        let d = 1e-3;
        let s = singular_asymptote_raw(&q(1.0 - d, 1.0, 0.0)).unwrap();
        let exact = salpeter_massless(&q(1.0 - d, 1.0, 0.0)).unwrap() * PI;
        assert!(rel(s, exact) < 1e-3);
        assert!(singular_asymptote(&q(0.5, 1.0, 1.0)).is_err());
        assert!(singular_asymptote(&q(1.0, 1.0, 1.0)).is_err());
        let s = singular_asymptote_raw(&q(1.0 - 1e-2, 1.0, 1.0)).unwrap();
        assert!(rel(s, 1.0 / Complex64::new(0.0, 2e-2)) < 0.1);
    }

    #[test]
    fn imaginary_time_is_positive_real() {
        let g = salpeter_closed_imaginary_time(1.3, 0.7, 2.0).unwrap();
        assert!(g.im.abs() <= 1e-15 * g.re && g.re > 0.0);
    }
}

//! The Baeumer (relativistic diffusion) propagator
//! `G(x, t, m) = (e^{mt}/pi) int_0^inf e^{-sqrt(m^2+p^2) t} cos(px) dp`,
//! a positive, normalized density that goes from a Cauchy law at `mt << 1`
//! to a Gaussian at `mt >> 1`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::quadrature::{
    integrate_finite_points, integrate_oscillatory_cos, integrate_semi_infinite_decaying, QuadratureConfig,
    QuadratureResult,
};
use crate::salpeter::PropagatorQuery;
use crate::specfun::bessel_k1_scaled;

/// Point `(x, t, m)` at which the sign of the outer representation is fixed.
pub const SIGN_CALIBRATION_POINT: (f64, f64, f64) = (2.0, 0.5, 1.0);

/// Closed form `m t e^{mt} K1(m r) / (pi r)`, `r = sqrt(x^2 + t^2)`; the
/// Cauchy kernel `t / (pi (t^2 + x^2))` when `m = 0`.
pub fn baeumer_closed(q: &PropagatorQuery) -> Result<f64> {
    let (x, t, m) = (q.x, q.t, q.m);
    if !(t > 0.0) {
        return Err(domain("baeumer_closed needs t > 0"));
    }
    if m == 0.0 {
        return Ok(baeumer_cauchy(x, t));
    }
    let r = x.hypot(t);
    // m (t - r) without cancellation
    let exponent = -m * x * x / (t + r);
    Ok(m * t * bessel_k1_scaled(m * r)? * exponent.exp() / (PI * r))
}

/// Massless (Cauchy) kernel.
pub fn baeumer_cauchy(x: f64, t: f64) -> f64 {
    t / (PI * (t * t + x * x))
}

/// Large-`mt` limit `sqrt(m/(2 pi t)) e^{-m x^2/(2t)}`.
pub fn baeumer_gaussian_limit(q: &PropagatorQuery) -> Result<f64> {
    if q.m == 0.0 {
        return Err(domain("gaussian limit requires m > 0"));
    }
    Ok((q.m / (2.0 * PI * q.t)).sqrt() * (-q.m * q.x * q.x / (2.0 * q.t)).exp())
}

/// Inner representation by oscillatory quadrature; the factor `e^{mt}` is
/// folded into the envelope `e^{-t (sqrt(m^2+p^2) - m)}`.
pub fn baeumer_integral_inner(q: &PropagatorQuery, cfg: &QuadratureConfig) -> Result<QuadratureResult> {
    let (x, t, m) = (q.x, q.t, q.m);
    let envelope = move |p: f64| (-t * p * p / ((m * m + p * p).sqrt() + m)).exp();
    let scale = Complex64::new(1.0 / PI, 0.0);
    let r = if m == 0.0 {
        integrate_oscillatory_cos(move |p: f64| (-t * p).exp(), x, 0.0, cfg)
    } else {
        integrate_oscillatory_cos(envelope, x, 0.0, cfg)
    };
    Ok(r.map_err(|e| e.scale_partial(scale))?.scaled(scale))
}

/// `(e^{mt}/pi) int_m^inf sin(sqrt(q^2-m^2) t) e^{-qx} dq` without the
/// calibrated overall sign.
pub fn baeumer_integral_outer_unsigned(q: &PropagatorQuery, cfg: &QuadratureConfig) -> Result<QuadratureResult> {
    let (x, t, m) = (q.x, q.t, q.m);
    if !(x > 0.0) {
        return Err(domain("outer representation needs x > 0"));
    }
    let scale = Complex64::new(1.0 / PI, 0.0);
    let r = if m == 0.0 {
        integrate_semi_infinite_decaying(|p: f64| Complex64::new((p * t).sin() * (-p * x).exp(), 0.0), 0.0, x, cfg)
    } else {
        integrate_semi_infinite_decaying(
            |s: f64| {
                let (sh, ch) = (s.sinh(), s.cosh());
                Complex64::new((m * t * sh).sin() * (m * (t - x * ch)).exp() * m * sh, 0.0)
            },
            0.0,
            1.0,
            cfg,
        )
    };
    Ok(r.map_err(|e| e.scale_partial(scale))?.scaled(scale))
}

/// Outcome of matching the outer representation against the inner one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignCalibration {
    pub sigma: f64,
    pub inner: f64,
    pub outer_unsigned: f64,
    pub point: (f64, f64, f64),
}

/// Sign of the outer representation, determined on first use at
/// [`SIGN_CALIBRATION_POINT`] and cached afterwards.
pub fn outer_sign_calibration() -> Result<SignCalibration> {
    static CALIBRATION: OnceLock<Result<SignCalibration>> = OnceLock::new();
    CALIBRATION.get_or_init(calibrate_outer_sign).clone()
}

fn calibrate_outer_sign() -> Result<SignCalibration> {
    let (x, t, m) = SIGN_CALIBRATION_POINT;
    let q = PropagatorQuery::new(x, t, m)?;
    let cfg = QuadratureConfig { abs_tol: 1e-14, rel_tol: 1e-11, ..Default::default() };
    let inner = baeumer_integral_inner(&q, &cfg)?.value.re;
    let outer = baeumer_integral_outer_unsigned(&q, &cfg)?.value.re;
    if (outer.abs() - inner.abs()).abs() > 1e-2 * inner.abs() {
        return Err(Error::SignCalibration(format!("|outer| = {outer:e} and |inner| = {inner:e} differ by more than 1%")));
    }
    let sigma = if outer * inner >= 0.0 { 1.0 } else { -1.0 };
    Ok(SignCalibration { sigma, inner, outer_unsigned: outer, point: SIGN_CALIBRATION_POINT })
}

/// Outer representation with the calibrated sign applied.
pub fn baeumer_integral_outer(q: &PropagatorQuery, cfg: &QuadratureConfig) -> Result<QuadratureResult> {
    let sigma = outer_sign_calibration()?.sigma;
    let sigma = Complex64::new(sigma, 0.0);
    Ok(baeumer_integral_outer_unsigned(q, cfg).map_err(|e| e.scale_partial(sigma))?.scaled(sigma))
}

/// Upper end of the `x` integrals for moments and normalization.
fn moment_cutoff(t: f64, m: f64) -> f64 {
    t + 40.0 / m
}

fn moment_integral(t: f64, m: f64, power: i32, cfg: &QuadratureConfig) -> Result<f64> {
    if !(t > 0.0 && m > 0.0 && t.is_finite() && m.is_finite()) {
        return Err(domain(format!("moments need t > 0 and m > 0 (t={t}, m={m})")));
    }
    let end = moment_cutoff(t, m);
    let mut points = vec![0.0, t, t + 1.0 / m, (t * (t / m).sqrt()).sqrt(), (t / m).sqrt(), end];
    points.retain(|p| *p < end);
    points.push(end);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let r = integrate_finite_points(
        |x: f64| {
            let g = baeumer_closed(&PropagatorQuery { x, t, m }).unwrap_or(f64::NAN);
            Complex64::new(x.powi(power) * g, 0.0)
        },
        &points,
        cfg,
    )?;
    Ok(2.0 * r.value.re)
}

/// `<x^2> = int x^2 G(x, t) dx`, integrated to `x = t + 40/m` and doubled.
pub fn second_moment(t: f64, m: f64, cfg: &QuadratureConfig) -> Result<f64> {
    moment_integral(t, m, 2, cfg)
}

/// `int G(x, t) dx` over the same range as [`second_moment`].
pub fn total_mass(t: f64, m: f64, cfg: &QuadratureConfig) -> Result<f64> {
    moment_integral(t, m, 0, cfg)
}

/// Least-squares slope of `ln G` over `x in [10t + 10/m, 10t + 30/m]`.
pub fn tail_rate(t: f64, m: f64) -> Result<f64> {
    if !(m > 0.0 && t > 0.0) {
        return Err(domain("tail rate needs t > 0 and m > 0"));
    }
    let (lo, hi) = (10.0 * t + 10.0 / m, 10.0 * t + 30.0 / m);
    let n = 41;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        xs.push(x);
        ys.push(ln_baeumer_closed(x, t, m)?);
    }
    Ok(least_squares_slope(&xs, &ys))
}

/// `ln G` for `m > 0`, finite far past the point where `G` underflows.
fn ln_baeumer_closed(x: f64, t: f64, m: f64) -> Result<f64> {
    let r = x.hypot(t);
    Ok((m * t / (PI * r)).ln() - m * x * x / (t + r) + bessel_k1_scaled(m * r)?.ln())
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Peak height and second moment on a log-spaced time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffusionSummary {
    pub mass: f64,
    pub times: Vec<f64>,
    pub peak_values: Vec<f64>,
    pub second_moments: Vec<f64>,
    /// Centered log-log slopes at the interior grid points.
    pub peak_slopes: Vec<f64>,
    pub moment_slopes: Vec<f64>,
}

/// Log-spaced grid from `t_min` to `t_max` with at least `points_per_decade`
/// points per decade; a single point when the bounds coincide.
pub fn log_grid(t_min: f64, t_max: f64, points_per_decade: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max >= t_min && t_max.is_finite()) {
        return Err(domain(format!("log grid needs 0 < t_min <= t_max (got {t_min}, {t_max})")));
    }
    if t_min == t_max {
        return Ok(vec![t_min]);
    }
    let decades = (t_max / t_min).log10();
    let n = ((points_per_decade as f64 * decades) - 1e-9).ceil().max(1.0) as usize + 1;
    let (a, b) = (t_min.ln(), t_max.ln());
    Ok((0..n)
        .map(|i| match i {
            0 => t_min,
            _ if i == n - 1 => t_max,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

fn centered_slopes(times: &[f64], values: &[f64]) -> Vec<f64> {
    (1..times.len().saturating_sub(1))
        .map(|i| (values[i + 1].ln() - values[i - 1].ln()) / (times[i + 1].ln() - times[i - 1].ln()))
        .collect()
}

/// Diffusion statistics for `t` from `t_min` to `t_max`.
pub fn diffusion_scan(
    t_min: f64,
    t_max: f64,
    points_per_decade: usize,
    m: f64,
    cfg: &QuadratureConfig,
) -> Result<DiffusionSummary> {
    if points_per_decade < 4 && t_min < t_max {
        return Err(domain("diffusion scan needs at least 4 points per decade"));
    }
    if !(m > 0.0) {
        return Err(domain("diffusion scan needs m > 0"));
    }
    let times = log_grid(t_min, t_max, points_per_decade)?;
    let rows: Vec<(f64, f64)> = times
        .par_iter()
        .map(|&t| -> Result<(f64, f64)> {
            let peak = baeumer_closed(&PropagatorQuery { x: 0.0, t, m })?;
            Ok((peak, second_moment(t, m, cfg)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let peak_values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let second_moments: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(DiffusionSummary {
        mass: m,
        peak_slopes: centered_slopes(&times, &peak_values),
        moment_slopes: centered_slopes(&times, &second_moments),
        times,
        peak_values,
        second_moments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(x: f64, t: f64, m: f64) -> PropagatorQuery {
        PropagatorQuery::new(x, t, m).unwrap()
    }

    #[test]
    fn closed_examples() {
        assert!((baeumer_closed(&q(0.0, 1.0, 0.0)).unwrap() - 1.0 / PI).abs() < 1e-15);
        let g = baeumer_closed(&q(0.0, 1e-3, 1.0)).unwrap();
        assert!((g * PI * 1e-3 - 1.0).abs() < 2e-3);
        let g = baeumer_closed(&q(0.0, 1000.0, 1.0)).unwrap();
        assert!((g / (1.0 / (2.0 * PI * 1000.0)).sqrt() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn inner_examples() {
        let cfg = QuadratureConfig { abs_tol: 1e-14, rel_tol: 1e-11, ..Default::default() };
        let c = baeumer_closed(&q(0.0, 1.0, 1.0)).unwrap();
        let i = baeumer_integral_inner(&q(0.0, 1.0, 1.0), &cfg).unwrap().value.re;
        assert!((i - c).abs() < 1e-8 * c);
        let i = baeumer_integral_inner(&q(3.0, 1.0, 0.0), &cfg).unwrap().value.re;
        assert!((i - 1.0 / (10.0 * PI)).abs() < 1e-10);
    }

    #[test]
    fn outer_examples() {
        let cal = outer_sign_calibration().unwrap();
        assert_eq!(cal.sigma, 1.0);
        assert!((cal.outer_unsigned.abs() - cal.inner.abs()).abs() < 1e-6 * cal.inner.abs());
        let cfg = QuadratureConfig::default();
        let o = baeumer_integral_outer(&q(2.0, 1.0, 0.0), &cfg).unwrap().value.re;
        assert!((o - 1.0 / (5.0 * PI)).abs() < 1e-9);
        let c = baeumer_closed(&q(3.0, 1.0, 1.0)).unwrap();
        let o = baeumer_integral_outer(&q(3.0, 1.0, 1.0), &cfg).unwrap().value.re;
        assert!((o - c).abs() < 1e-6 * c);
    }

    #[test]
    fn outer_tail_slope() {
        let cfg = QuadratureConfig { abs_tol: 1e-300, rel_tol: 1e-10, ..Default::default() };
        let g = |x: f64| baeumer_integral_outer(&q(x, 1.0, 1.0), &cfg).unwrap().value.re;
        let slope = (g(101.0).ln() - g(99.0).ln()) / 2.0;
        assert!((slope + 1.0).abs() < 0.02, "slope {slope}");
    }

    #[test]
    fn gaussian_examples() {
        let g = baeumer_gaussian_limit(&q(0.0, 1.0 / (2.0 * PI), 1.0)).unwrap();
        assert!((g - 1.0).abs() < 1e-15);
        assert!(baeumer_gaussian_limit(&q(0.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn moments() {
        let cfg = QuadratureConfig::default();
        assert!((second_moment(1.0, 1.0, &cfg).unwrap() - 1.0).abs() < 1e-4);
        assert!((second_moment(5.0, 2.0, &cfg).unwrap() - 2.5).abs() < 1e-4);
        assert!((total_mass(1.0, 1.0, &cfg).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn log_grid_shapes() {
        let g = log_grid(1e-2, 1e2, 4).unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!(g[0], 1e-2);
        assert_eq!(g[16], 1e2);
        assert_eq!(log_grid(3.0, 3.0, 4).unwrap(), vec![3.0]);
        assert!(log_grid(3.0, 2.0, 4).is_err());
    }

    #[test]
    fn scan_slopes() {
        let s = diffusion_scan(0.1, 10.0, 4, 1.0, &QuadratureConfig::default()).unwrap();
        assert_eq!(s.peak_slopes.len(), s.times.len() - 2);
        assert!(s.moment_slopes.iter().all(|v| (v - 1.0).abs() < 0.02));
        let single = diffusion_scan(2.0, 2.0, 4, 1.0, &QuadratureConfig::default()).unwrap();
        assert_eq!(single.times.len(), 1);
        assert!(single.peak_slopes.is_empty());
    }
}

//! Split perturbative series for the Salpeter propagator.
//!
//! With `S = int_0^inf e^{-it sqrt(m^2+p^2)} cos(px) dp` cut at `p = m`,
//!
//! * `G1 = int_0^m ... = m e^{-imt} sum_n g1^(n)(mt)/n! f_n(mx)`,
//! * `G2 = int_m^inf ... = (m/2) sum_n g2^(n)(mt)/n! (E_n(im(t-x)) + E_n(im(t+x)))`,
//!
//! and the propagator is `G = e^{imt} (G1 + G2) / pi`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::specfun::{expint_en, f_n, g1_coefficients, g2_coefficients};
use crate::ComplexScalar;

pub const DEFAULT_ORDER: usize = 10;

/// Truncated series value, split into its two blocks.
///
/// All fields are in the normalization of the propagator itself, i.e. with
/// the `e^{imt}/pi` factor applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEvaluation {
    pub value: ComplexScalar,
    pub order_used: usize,
    pub g1_partial: ComplexScalar,
    pub g2_partial: ComplexScalar,
    /// Magnitude of the highest-order term kept.
    pub last_term_magnitude: f64,
}

fn check(x: f64, t: f64, m: f64) -> Result<()> {
    if !(x.is_finite() && t > 0.0 && t.is_finite() && m > 0.0 && m.is_finite()) {
        return Err(domain(format!("series needs finite x, t > 0, m > 0 (x={x}, t={t}, m={m})")));
    }
    Ok(())
}

fn g1_terms(x: f64, t: f64, m: f64, order_max: usize) -> Result<Vec<Complex64>> {
    check(x, t, m)?;
    let g = g1_coefficients(m * t, order_max);
    let pre = Complex64::from_polar(m, -m * t);
    let mut fact = 1.0;
    let mut out = Vec::with_capacity(order_max + 1);
    for n in 0..=order_max {
        if n > 0 {
            fact *= n as f64;
        }
        if n % 2 == 1 {
            out.push(Complex64::new(0.0, 0.0));
            continue;
        }
        out.push(pre * g.values[n] * (f_n(n as u32, m * x)? / fact));
    }
    Ok(out)
}

fn g2_terms(x: f64, t: f64, m: f64, order_max: usize) -> Result<Vec<Complex64>> {
    check(x, t, m)?;
    let x = x.abs();
    let g = g2_coefficients(m * t, order_max);
    let near = Complex64::new(0.0, m * (t - x));
    let far = Complex64::new(0.0, m * (t + x));
    let mut fact = 1.0;
    let mut out = Vec::with_capacity(order_max + 1);
    for n in 0..=order_max {
        if n > 0 {
            fact *= n as f64;
        }
        let e = expint_en(n as u32, near)? + expint_en(n as u32, far)?;
        out.push(g.values[n] * e * (0.5 * m / fact));
    }
    Ok(out)
}

/// `G1` through `order_max`, without the `e^{imt}/pi` factor.
pub fn series_g1(x: f64, t: f64, m: f64, order_max: usize) -> Result<ComplexScalar> {
    Ok(g1_terms(x, t, m, order_max)?.iter().sum())
}

/// `G2` through `order_max`, without the `e^{imt}/pi` factor.
pub fn series_g2(x: f64, t: f64, m: f64, order_max: usize) -> Result<ComplexScalar> {
    Ok(g2_terms(x, t, m, order_max)?.iter().sum())
}

/// Combined series in the propagator normalization.
pub fn series_propagator(x: f64, t: f64, m: f64, order_max: usize) -> Result<SeriesEvaluation> {
    let x = x.abs();
    let a = g1_terms(x, t, m, order_max)?;
    let b = g2_terms(x, t, m, order_max)?;
    let norm = Complex64::from_polar(1.0 / PI, m * t);
    let g1_partial = a.iter().sum::<Complex64>() * norm;
    let g2_partial = b.iter().sum::<Complex64>() * norm;
    let last_term_magnitude = (a[order_max] + b[order_max]).norm() / PI;
    Ok(SeriesEvaluation {
        value: g1_partial + g2_partial,
        order_used: order_max,
        g1_partial,
        g2_partial,
        last_term_magnitude,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::salpeter::{salpeter_closed, PropagatorQuery};

    #[test]
    fn leading_terms() {
        let (x, t, m) = (0.7, 0.4, 1.3);
        let g1 = series_g1(x, t, m, 0).unwrap();
        let expect = Complex64::from_polar(m, -m * t) * ((m * x).sin() / (m * x));
        assert!((g1 - expect).norm() < 1e-14);
        let g2 = series_g2(x, t, m, 0).unwrap();
        let i = Complex64::i();
        let zn = i * m * (t - x);
        let zf = i * m * (t + x);
        let expect = 0.5 * m * ((-zn).exp() / zn + (-zf).exp() / zf);
        assert!((g2 - expect).norm() < 1e-14);
    }

    #[test]
    fn symmetric_and_split() {
        let a = series_propagator(0.3, 0.5, 1.0, 8).unwrap();
        let b = series_propagator(-0.3, 0.5, 1.0, 8).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.value, a.g1_partial + a.g2_partial);
    }

    #[test]
    fn cone_is_singular() {
        assert!(matches!(series_g2(1.0, 1.0, 1.0, 4), Err(Error::Singularity(_))));
    }

    #[test]
    fn matches_closed_form() {
        let s = series_propagator(0.4, 1.0, 0.5, 10).unwrap();
        let c = salpeter_closed(&PropagatorQuery::new(0.4, 1.0, 0.5).unwrap()).unwrap();
        assert!((s.value - c).norm() < 1e-3 * c.norm());
    }
}

//! Special functions used by the closed forms and the perturbative series.
//!
//! Only what the propagators need is provided: `K1`, `H1(1)`, the generalized
//! exponential integral `E_n`, `1F2`, the `f_n` kernel family and the Taylor
//! coefficient families `g1`, `g2`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::ComplexScalar;

pub(crate) const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = f64::EPSILON;

/// Radius below which `H1(1)` of complex argument is summed from the
/// ascending series; beyond it the Laplace-type integral is used.
const HANKEL_SERIES_RADIUS: f64 = 2.0;
/// Real arguments are cheap and well conditioned in the series up to here.
const HANKEL_SERIES_RADIUS_REAL: f64 = 8.0;

fn check_positive(name: &str, y: f64) -> Result<()> {
    if !(y.is_finite() && y > 0.0) {
        return Err(domain(format!("{name} requires a positive finite argument, got {y}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// K1

/// `K1(y)` together with its exponentially scaled value `e^y K1(y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct K1Value {
    pub value: f64,
    pub scaled: f64,
    /// Set when `e^{-y}` pushes the result below the normal range; `value` is
    /// then 0.
    pub underflow: bool,
}

/// Modified Bessel function of the second kind, order one.
pub fn bessel_k1(y: f64) -> Result<f64> {
    Ok(bessel_k1_flagged(y)?.value)
}

/// `K1(y)` with an explicit underflow flag.
pub fn bessel_k1_flagged(y: f64) -> Result<K1Value> {
    let scaled = bessel_k1_scaled(y)?;
    let value = scaled * (-y).exp();
    if value < f64::MIN_POSITIVE {
        Ok(K1Value { value: 0.0, scaled, underflow: true })
    } else {
        Ok(K1Value { value, scaled, underflow: false })
    }
}

/// `e^y K1(y)`, finite for every positive `y`.
pub fn bessel_k1_scaled(y: f64) -> Result<f64> {
    check_positive("bessel_k1", y)?;
    if y <= 2.0 {
        Ok(k1_ascending(y) * y.exp())
    } else {
        Ok(k1_scaled_steed(y))
    }
}

/// `1/y + ln(y/2) I1(y) - (y/4) sum (psi(k+1)+psi(k+2)) (y^2/4)^k / (k!(k+1)!)`
fn k1_ascending(y: f64) -> f64 {
    let z = 0.25 * y * y;
    let mut term = 1.0;
    let mut psi_a = -EULER_GAMMA;
    let mut psi_b = 1.0 - EULER_GAMMA;
    let mut i_sum = 0.0;
    let mut s_sum = 0.0;
    for k in 0..80 {
        i_sum += term;
        s_sum += (psi_a + psi_b) * term;
        if k > 0 && term <= 0.1 * EPS * i_sum {
            break;
        }
        let kf = (k + 1) as f64;
        term *= z / (kf * (kf + 1.0));
        psi_a += 1.0 / kf;
        psi_b += 1.0 / (kf + 1.0);
    }
    1.0 / y + (0.5 * y).ln() * (0.5 * y) * i_sum - 0.25 * y * s_sum
}

/// Steed's continued fraction (Temme's CF2) for `e^y K0` and `e^y K1`, y > 2.
fn k1_scaled_steed(x: f64) -> f64 {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() / s;
    k0 * (x + 0.5 - h) / x
}

// ---------------------------------------------------------------------------
// H1(1)

/// Hankel function `H1(1)(y) = J1(y) + i Y1(y)` for real `y > 0`.
pub fn hankel1_order1(y: f64) -> Result<ComplexScalar> {
    check_positive("hankel1_order1", y)?;
    if y <= HANKEL_SERIES_RADIUS_REAL {
        Ok(hankel1_ascending(Complex64::new(y, 0.0)))
    } else {
        Ok(hankel1_laplace(Complex64::new(y, 0.0)))
    }
}

/// `H1(1)(z)` for complex `z` in the closed upper half plane, `z != 0`.
pub fn hankel1_order1_complex(z: ComplexScalar) -> Result<ComplexScalar> {
    if !(z.re.is_finite() && z.im.is_finite()) || z.im < 0.0 || z == Complex64::new(0.0, 0.0) {
        return Err(domain(format!("hankel1_order1_complex needs Im z >= 0, z != 0; got {z}")));
    }
    if z.im == 0.0 && z.re > 0.0 {
        return hankel1_order1(z.re);
    }
    if z.norm() <= HANKEL_SERIES_RADIUS {
        Ok(hankel1_ascending(z))
    } else {
        Ok(hankel1_laplace(z))
    }
}

/// `J1 + i Y1` from the ascending series (principal branch of the log).
fn hankel1_ascending(z: Complex64) -> Complex64 {
    let half = 0.5 * z;
    let w = -half * half;
    let mut term = Complex64::new(1.0, 0.0);
    let mut psi_a = -EULER_GAMMA;
    let mut psi_b = 1.0 - EULER_GAMMA;
    let mut j_sum = Complex64::new(0.0, 0.0);
    let mut s_sum = Complex64::new(0.0, 0.0);
    for k in 0..200 {
        j_sum += term;
        s_sum += term * (psi_a + psi_b);
        if k > 0 && term.norm() <= 0.1 * EPS * j_sum.norm().max(s_sum.norm()) {
            break;
        }
        let kf = (k + 1) as f64;
        term *= w / (kf * (kf + 1.0));
        psi_a += 1.0 / kf;
        psi_b += 1.0 / (kf + 1.0);
    }
    let j1 = half * j_sum;
    let y1 = (2.0 / PI) * j1 * half.ln() - 2.0 / (PI * z) - half * s_sum / PI;
    j1 + Complex64::i() * y1
}

/// Laplace-type integral
/// `H1(z) = sqrt(2/(pi z)) e^{i(z - 3pi/4)} / Gamma(3/2) * int_0^inf e^{-u} u^{1/2} (1 + iu/(2z))^{1/2} du`
/// evaluated with `u = s^2` by the trapezoid rule, which converges
/// geometrically because the integrand is analytic in a strip around the
/// real `s` axis of half-width `|Im sqrt(2iz)|`.
fn hankel1_laplace(z: Complex64) -> Complex64 {
    let strip = (2.0 * Complex64::i() * z).sqrt().im.abs();
    let h = (0.15 * strip).min(0.25);
    let s_max = 6.5;
    let n = (s_max / h).ceil() as usize;
    let inv_2z = Complex64::i() / (2.0 * z);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 1..=n {
        let s = k as f64 * h;
        let s2 = s * s;
        acc += (2.0 * s2 * (-s2).exp()) * (1.0 + inv_2z * s2).sqrt();
    }
    let integral = acc * h;
    let gamma_3_2 = 0.5 * PI.sqrt();
    let phase = if z.im == 0.0 {
        Complex64::new(z.re.cos(), z.re.sin())
    } else {
        (Complex64::i() * z).exp()
    };
    let rot = Complex64::from_polar(1.0, -0.75 * PI);
    (2.0 / (PI * z)).sqrt() * phase * rot * integral / gamma_3_2
}

// ---------------------------------------------------------------------------
// E_n

/// Generalized exponential integral `E_n(z) = int_1^inf u^{-n} e^{-z u} du`.
///
/// Each order is evaluated directly: `e^{-z}/z` for `n = 0`, the log-plus-power
/// series for `|z| < 1`, and a modified-Lentz continued fraction otherwise.
pub fn expint_en(n: u32, z: ComplexScalar) -> Result<ComplexScalar> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(domain(format!("expint_en: non-finite argument {z}")));
    }
    if z.re < 0.0 {
        return Err(domain(format!("expint_en requires Re z >= 0, got {z}")));
    }
    if z.norm() == 0.0 {
        if n <= 1 {
            return Err(Error::Singularity(format!("E_{n}(0) diverges")));
        }
        return Ok(Complex64::new(1.0 / (n as f64 - 1.0), 0.0));
    }
    if n == 0 {
        return Ok((-z).exp() / z);
    }
    if z.norm() < 1.0 {
        Ok(en_series(n, z))
    } else {
        Ok(en_continued_fraction(n, z))
    }
}

fn en_series(n: u32, z: Complex64) -> Complex64 {
    let nm1 = n as usize - 1;
    let mut psi = -EULER_GAMMA;
    for k in 1..n {
        psi += 1.0 / k as f64;
    }
    // term_k = (-z)^k / k!
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut lead = Complex64::new(0.0, 0.0);
    for k in 0..400usize {
        if k > 0 {
            term *= -z / k as f64;
        }
        if k == nm1 {
            lead = term;
            continue;
        }
        let add = term / (k as f64 - nm1 as f64);
        sum -= add;
        if k > nm1 && add.norm() <= 0.1 * EPS * sum.norm() {
            break;
        }
    }
    sum + lead * (psi - z.ln())
}

fn en_continued_fraction(n: u32, z: Complex64) -> Complex64 {
    let tiny = 1e-300;
    let nf = n as f64;
    let mut b = z + nf;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..100_000 {
        let fi = i as f64;
        let an = -fi * (nf - 1.0 + fi);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < EPS {
            break;
        }
    }
    h * (-z).exp()
}

// ---------------------------------------------------------------------------
// 1F2 and f_n

/// Generalized hypergeometric `1F2(a; b1, b2; z)` by direct summation.
///
/// Terms are added until three consecutive ones fall below `1e-16` of the
/// running sum, with a cap of 500 terms.
pub fn hyp1f2(a: f64, b1: f64, b2: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut small = 0;
    for k in 0..500 {
        let kf = k as f64;
        term *= (a + kf) / ((b1 + kf) * (b2 + kf) * (kf + 1.0)) * z;
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            small += 1;
            if small == 3 {
                break;
            }
        } else {
            small = 0;
        }
    }
    sum
}

/// `f_n(rho) = int_0^1 e^n cos(rho e) de`.
///
/// The `1F2` series is used for `|rho| <= 10`, where its cancellation costs
/// fewer than four digits; beyond that the trigonometric closed forms are
/// generated by upward recurrence, which is stable while `n` stays below
/// about `2|rho|`.
pub fn f_n(n: u32, rho: f64) -> Result<f64> {
    if !rho.is_finite() {
        return Err(domain(format!("f_n: non-finite argument {rho}")));
    }
    let r = rho.abs();
    if r <= 10.0 || n as f64 > 2.0 * r {
        Ok(f_n_hypergeometric(n, r))
    } else {
        Ok(f_n_trig(n, r))
    }
}

pub(crate) fn f_n_hypergeometric(n: u32, rho: f64) -> f64 {
    let a = 0.5 * (n as f64 + 1.0);
    hyp1f2(a, 0.5, a + 1.0, -0.25 * rho * rho) / (n as f64 + 1.0)
}

/// Upward recurrence on the pair `f_k = int e^k cos`, `s_k = int e^k sin`.
pub(crate) fn f_n_trig(n: u32, rho: f64) -> f64 {
    let (sr, cr) = rho.sin_cos();
    let mut f = sr / rho;
    let mut s = (1.0 - cr) / rho;
    for k in 1..=n {
        let kf = k as f64;
        let f_next = sr / rho - kf / rho * s;
        let s_next = -cr / rho + kf / rho * f;
        f = f_next;
        s = s_next;
    }
    f
}

// ---------------------------------------------------------------------------
// g1 / g2 coefficient families

/// Derivatives `g^(n)(y)` at `e = 0` for `n = 0..=order_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    pub order_max: usize,
    pub values: Vec<ComplexScalar>,
}

impl SeriesCoefficients {
    pub fn get(&self, n: usize) -> ComplexScalar {
        self.values[n]
    }
}

/// Taylor coefficients of `sqrt(1 + e^2) - 1` in powers of `e^2`:
/// `binom(1/2, k)` for `k >= 1`.
fn half_binomials(kmax: usize) -> Vec<f64> {
    let mut c = vec![0.0; kmax + 1];
    let mut b = 1.0;
    for (k, ck) in c.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        b *= (0.5 - kf + 1.0) / kf;
        *ck = b;
    }
    c
}

/// `exp(u(e))` for a truncated series `u` with `u_0 = 0`, via `E' = u' E`.
fn exp_series(u: &[Complex64]) -> Vec<Complex64> {
    let n = u.len();
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    if n == 0 {
        return e;
    }
    e[0] = Complex64::new(1.0, 0.0);
    for j in 1..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 1..=j {
            acc += u[k] * e[j - k] * k as f64;
        }
        e[j] = acc / j as f64;
    }
    e
}

fn scale_by_factorial(mut c: Vec<Complex64>) -> Vec<Complex64> {
    let mut fact = 1.0;
    for (n, v) in c.iter_mut().enumerate() {
        if n > 0 {
            fact *= n as f64;
        }
        *v *= fact;
    }
    c
}

/// `g1^(n)(y)`: derivatives of `exp(-i y (sqrt(1+e^2) - 1))` at `e = 0`.
pub fn g1_coefficients(y: f64, order_max: usize) -> SeriesCoefficients {
    let n = order_max + 1;
    let binom = half_binomials(n / 2 + 1);
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    for k in 1.. {
        let p = 2 * k;
        if p >= n {
            break;
        }
        u[p] = Complex64::new(0.0, -y * binom[k]);
    }
    let mut values = scale_by_factorial(exp_series(&u));
    for v in values.iter_mut().skip(1).step_by(2) {
        *v = Complex64::new(0.0, 0.0);
    }
    SeriesCoefficients { order_max, values }
}

/// `g2^(n)(y)`: derivatives of `exp(-i (y/e) (sqrt(1+e^2) - 1))` at `e = 0`.
pub fn g2_coefficients(y: f64, order_max: usize) -> SeriesCoefficients {
    let n = order_max + 1;
    let binom = half_binomials(n / 2 + 2);
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    for k in 1.. {
        let p = 2 * k - 1;
        if p >= n {
            break;
        }
        u[p] = Complex64::new(0.0, -y * binom[k]);
    }
    SeriesCoefficients { order_max, values: scale_by_factorial(exp_series(&u)) }
}

/// `-(pi/2) H1(1)(i y)`, which should reproduce `K1(y)`.
pub fn k1_via_hankel(y: f64) -> Result<f64> {
    check_positive("k1_via_hankel", y)?;
    let h = hankel1_order1_complex(Complex64::new(0.0, y))?;
    Ok((-FRAC_PI_2 * h).re)
}

//! Adaptive quadrature for the integral representations.
//!
//! All routines integrate complex-valued functions of one real variable and
//! report a value, an error estimate and the number of integrand calls.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ComplexScalar;

/// Tolerances and limits shared by every quadrature routine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Tails are dropped once the decaying exponent exceeds this value.
    pub tail_cutoff_exponent: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { abs_tol: 1e-10, rel_tol: 1e-8, max_subdivisions: 2000, tail_cutoff_exponent: 745.0 }
    }
}

impl QuadratureConfig {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let cfg = QuadratureConfig { abs_tol, rel_tol, max_subdivisions, ..Default::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.max_subdivisions >= 1)
            || !(self.tail_cutoff_exponent > 0.0)
        {
            return Err(domain(format!("invalid quadrature configuration {self:?}")));
        }
        Ok(())
    }

    /// Accuracy demanded for an integral of magnitude `magnitude`.
    pub fn target(&self, magnitude: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * magnitude)
    }

    fn with_abs_tol(&self, abs_tol: f64) -> Self {
        QuadratureConfig { abs_tol: abs_tol.max(f64::MIN_POSITIVE), ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: ComplexScalar,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadratureResult {
    fn zero() -> Self {
        QuadratureResult { value: Complex64::new(0.0, 0.0), error_estimate: 0.0, evaluations: 0, converged: true }
    }

    /// Multiply value and error by a constant factor.
    pub fn scaled(self, factor: ComplexScalar) -> Self {
        QuadratureResult { value: self.value * factor, error_estimate: self.error_estimate * factor.norm(), ..self }
    }

    fn absorb(&mut self, other: &QuadratureResult) {
        self.value += other.value;
        self.error_estimate += other.error_estimate;
        self.evaluations += other.evaluations;
        self.converged &= other.converged;
    }
}

// 21-point Kronrod extension of the 10-point Gauss rule. Gauss nodes are the
// odd entries of XGK.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

const EPS: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gauss_kronrod<F: Fn(f64) -> ComplexScalar>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = Complex64::new(0.0, 0.0);
    let mut finite = fc.is_finite();
    let mut absolute = fc.norm() * WGK[10];
    for j in 0..5 {
        let k = 2 * j + 1;
        let dx = half * XGK[k];
        let (lo, hi) = (f(center - dx), f(center + dx));
        let pair = lo + hi;
        finite &= pair.is_finite();
        gauss += pair * WG[j];
        kronrod += pair * WGK[k];
        absolute += (lo.norm() + hi.norm()) * WGK[k];
    }
    for j in 0..5 {
        let k = 2 * j;
        let dx = half * XGK[k];
        let (lo, hi) = (f(center - dx), f(center + dx));
        let pair = lo + hi;
        finite &= pair.is_finite();
        kronrod += pair * WGK[k];
        absolute += (lo.norm() + hi.norm()) * WGK[k];
    }
    if !finite {
        return Err(domain(format!("integrand is not finite on [{a}, {b}]")));
    }
    let value = kronrod * half;
    // rounding floor on the Kronrod-Gauss difference
    let error = ((kronrod - gauss) * half).norm().max(50.0 * EPS * absolute * half.abs());
    Ok(Panel { a, b, value, error })
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
pub fn integrate_finite<F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<QuadratureResult>
where
    F: Fn(f64) -> ComplexScalar,
{
    integrate_finite_points(f, &[a, b], cfg)
}

/// Like [`integrate_finite`] with extra breakpoints; `points` must be
/// non-decreasing and its ends are the integration limits.
pub fn integrate_finite_points<F>(f: F, points: &[f64], cfg: &QuadratureConfig) -> Result<QuadratureResult>
where
    F: Fn(f64) -> ComplexScalar,
{
    cfg.validate()?;
    if points.len() < 2 || points.iter().any(|p| !p.is_finite()) {
        return Err(domain("integration limits must be finite"));
    }
    if points.windows(2).any(|w| w[1] < w[0]) {
        return Err(domain(format!("integration limits must be ordered, got {points:?}")));
    }
    let mut heap = BinaryHeap::new();
    let mut frozen = Vec::new();
    let mut evaluations = 0;
    let mut total = Complex64::new(0.0, 0.0);
    let mut total_err = 0.0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            let p = gauss_kronrod(&f, w[0], w[1])?;
            evaluations += 21;
            total += p.value;
            total_err += p.error;
            heap.push(p);
        }
    }
    let mut subdivisions = 0;
    let converged = loop {
        if total_err <= cfg.target(total.norm()) {
            break true;
        }
        if subdivisions >= cfg.max_subdivisions {
            break false;
        }
        let Some(p) = heap.pop() else { break false };
        let mid = 0.5 * (p.a + p.b);
        if !(p.a < mid && mid < p.b) || (p.b - p.a) <= 4.0 * f64::EPSILON * p.a.abs().max(p.b.abs()) {
            frozen.push(p);
            continue;
        }
        let left = gauss_kronrod(&f, p.a, mid)?;
        let right = gauss_kronrod(&f, mid, p.b)?;
        evaluations += 42;
        subdivisions += 1;
        total += left.value + right.value - p.value;
        total_err = (total_err + left.error + right.error - p.error).max(0.0);
        heap.push(left);
        heap.push(right);
        if subdivisions % 64 == 0 {
            total_err = heap.iter().chain(frozen.iter()).map(|p| p.error).sum();
        }
    };
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(frozen);
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().fold(Complex64::new(0.0, 0.0), |acc, p| acc + p.value);
    let error_estimate = panels.iter().map(|p| p.error).sum::<f64>();
    let converged = converged && error_estimate <= cfg.target(value.norm());
    let result = QuadratureResult { value, error_estimate, evaluations, converged };
    if converged {
        Ok(result)
    } else {
        Err(Error::Convergence { partial: result })
    }
}

/// Integrate over `[a, inf)` a function decaying at least like `e^{-lambda q}`.
///
/// Panels start at width `1/lambda` and double; summation stops after two
/// consecutive panels fall below a tenth of the running accuracy target, or
/// once `lambda (q - a)` passes the configured cutoff exponent.
pub fn integrate_semi_infinite_decaying<F>(
    f: F,
    a: f64,
    decay_rate_hint: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult>
where
    F: Fn(f64) -> ComplexScalar,
{
    cfg.validate()?;
    if !(decay_rate_hint > 0.0 && decay_rate_hint.is_finite()) || !a.is_finite() {
        return Err(domain(format!("semi-infinite integral needs a positive decay hint, got {decay_rate_hint}")));
    }
    let mut acc = QuadratureResult::zero();
    let mut lo = a;
    let mut width = 1.0 / decay_rate_hint;
    let mut small = 0;
    let mut not_shrinking = 0;
    let mut previous = f64::INFINITY;
    loop {
        if decay_rate_hint * (lo - a) > cfg.tail_cutoff_exponent {
            break;
        }
        let hi = lo + width;
        let panel_cfg = cfg.with_abs_tol(cfg.target(acc.value.norm()) / 8.0);
        let panel = match integrate_finite(&f, lo, hi, &panel_cfg) {
            Ok(r) => r,
            Err(Error::Convergence { partial }) => {
                acc.absorb(&partial);
                acc.converged = false;
                return Err(Error::Convergence { partial: acc });
            }
            Err(e) => return Err(e),
        };
        acc.absorb(&panel);
        let magnitude = panel.value.norm();
        if magnitude < cfg.target(acc.value.norm()) / 10.0 {
            small += 1;
            if small >= 2 {
                break;
            }
        } else {
            small = 0;
        }
        if magnitude >= previous {
            not_shrinking += 1;
            if not_shrinking >= 20 {
                acc.converged = false;
                return Err(Error::Decay { partial: acc, successive: not_shrinking });
            }
        } else {
            not_shrinking = 0;
        }
        previous = magnitude;
        lo = hi;
        width *= 2.0;
    }
    acc.converged = acc.error_estimate <= cfg.target(acc.value.norm());
    if acc.converged {
        Ok(acc)
    } else {
        Err(Error::Convergence { partial: acc })
    }
}

/// Sequence limit by repeated averaging of neighbouring partial sums.
fn euler_average(sums: &[f64]) -> f64 {
    let mut v = sums.to_vec();
    while v.len() > 1 {
        for i in 0..v.len() - 1 {
            v[i] = 0.5 * (v[i] + v[i + 1]);
        }
        v.pop();
    }
    v[0]
}

/// `int_a^inf envelope(p) cos(frequency p) dp` for a positive, eventually
/// decreasing envelope.
///
/// The range is cut at the zeros of the cosine and the tail of the resulting
/// alternating series is summed by repeated averaging of its partial sums.
pub fn integrate_oscillatory_cos<F>(
    envelope: F,
    frequency: f64,
    a: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    if !frequency.is_finite() || !a.is_finite() {
        return Err(domain("oscillatory integral needs finite frequency and start"));
    }
    let omega = frequency.abs();
    if omega == 0.0 {
        let hint = probe_decay_rate(&envelope, a);
        return integrate_semi_infinite_decaying(|p| Complex64::new(envelope(p), 0.0), a, hint, cfg);
    }
    const WINDOW: usize = 16;
    const WARMUP: usize = 6;
    let half_period = std::f64::consts::PI / omega;
    let mut k = (a / half_period - 0.5).ceil();
    let mut zero = (k + 0.5) * half_period;
    if zero <= a {
        k += 1.0;
        zero = (k + 0.5) * half_period;
    }
    let integrand = |p: f64| Complex64::new(envelope(p) * (omega * p).cos(), 0.0);
    let mut acc = QuadratureResult::zero();
    let mut sums: Vec<f64> = Vec::new();
    let mut terms: Vec<f64> = Vec::new();
    let mut estimates: Vec<f64> = Vec::new();
    let mut lo = a;
    let mut hi = zero;
    loop {
        let target = cfg.target(estimates.last().copied().unwrap_or(acc.value.re).abs());
        let panel_cfg = cfg.with_abs_tol(target / 16.0);
        let panel = match integrate_finite(integrand, lo, hi, &panel_cfg) {
            Ok(r) => r,
            Err(Error::Convergence { partial }) => {
                acc.absorb(&partial);
                acc.converged = false;
                return Err(Error::Convergence { partial: acc });
            }
            Err(e) => return Err(e),
        };
        acc.absorb(&panel);
        terms.push(panel.value.re);
        sums.push(acc.value.re);
        let n = terms.len();

        // Plain summation already converged.
        if n >= 2 && terms[n - 1].abs() < target / 10.0 && terms[n - 2].abs() < target / 10.0 {
            acc.converged = acc.error_estimate <= cfg.target(acc.value.norm());
            return if acc.converged { Ok(acc) } else { Err(Error::Convergence { partial: acc }) };
        }
        if n >= WARMUP {
            let start = n.saturating_sub(WINDOW);
            estimates.push(euler_average(&sums[start..]));
            let m = estimates.len();
            if m >= 3 {
                let d1 = (estimates[m - 1] - estimates[m - 2]).abs();
                let d2 = (estimates[m - 2] - estimates[m - 3]).abs();
                let goal = cfg.target(estimates[m - 1].abs());
                if d1 <= goal && d2 <= goal {
                    let value = Complex64::new(estimates[m - 1], 0.0);
                    let error_estimate = d1 + acc.error_estimate;
                    let converged = error_estimate <= goal.max(cfg.target(value.norm()));
                    let result =
                        QuadratureResult { value, error_estimate, evaluations: acc.evaluations, converged };
                    return if converged { Ok(result) } else { Err(Error::Convergence { partial: result }) };
                }
            }
        }
        if n >= 40 {
            let alternating = terms[n - 10..].windows(2).all(|w| w[0] * w[1] < 0.0);
            if !alternating {
                acc.converged = false;
                return Err(Error::Acceleration { partial: acc });
            }
        }
        if n >= cfg.max_subdivisions {
            let mut partial = acc;
            if let Some(&e) = estimates.last() {
                partial.value = Complex64::new(e, 0.0);
            }
            partial.converged = false;
            return Err(Error::Convergence { partial });
        }
        lo = hi;
        hi += half_period;
    }
}

/// Exponential rate of an envelope estimated from its values one unit apart.
fn probe_decay_rate<F: Fn(f64) -> f64>(envelope: &F, a: f64) -> f64 {
    let v0 = envelope(a).abs();
    let v1 = envelope(a + 1.0).abs();
    if v0 > 0.0 && v1 > 0.0 {
        let rate = (v0 / v1).ln();
        if rate.is_finite() && rate > 0.0 {
            return rate.clamp(1e-3, 1e3);
        }
    } else if v0 > 0.0 {
        return 1e3;
    }
    1.0
}

/// Cauchy principal value of `int_a^b f` for `f` with first-order poles at
/// the given points.
///
/// Symmetric gaps `(p - e, p + e)` are cut around every pole for
/// `e = e0, e0/2, e0/4` with `e0 = 1e-3` times the smallest distance between
/// poles or to the ends, and the odd powers `e` and `e^3` of the remainder are
/// removed by Richardson extrapolation.
pub fn principal_value<F>(f: F, poles: &[f64], a: f64, b: f64, cfg: &QuadratureConfig) -> Result<QuadratureResult>
where
    F: Fn(f64) -> ComplexScalar,
{
    cfg.validate()?;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(domain(format!("principal value needs finite a < b, got [{a}, {b}]")));
    }
    let mut poles: Vec<f64> = poles.to_vec();
    poles.sort_by(f64::total_cmp);
    if poles.iter().any(|&p| !(p > a && p < b)) {
        return Err(Error::PoleSeparation(format!("poles {poles:?} must lie strictly inside ({a}, {b})")));
    }
    if poles.is_empty() {
        return integrate_finite(f, a, b, cfg);
    }
    let mut separation = (poles[0] - a).min(b - poles[poles.len() - 1]);
    for w in poles.windows(2) {
        separation = separation.min(w[1] - w[0]);
    }
    let eps0 = 1e-3 * separation;
    if !(eps0 > 0.0) || poles.iter().any(|p| p - eps0 / 4.0 == *p) {
        return Err(Error::PoleSeparation(format!("poles {poles:?} are not separated")));
    }
    let pieces = poles.len() + 1;
    let seg_cfg = QuadratureConfig { abs_tol: cfg.abs_tol / (4 * pieces) as f64, rel_tol: cfg.rel_tol / 4.0, ..*cfg };
    let excised = |eps: f64| -> Result<QuadratureResult> {
        let mut acc = QuadratureResult::zero();
        let mut lo = a;
        for &p in &poles {
            acc.absorb(&integrate_finite(&f, lo, p - eps, &seg_cfg)?);
            lo = p + eps;
        }
        acc.absorb(&integrate_finite(&f, lo, b, &seg_cfg)?);
        Ok(acc)
    };
    let i0 = excised(eps0)?;
    let i1 = excised(eps0 / 2.0)?;
    let i2 = excised(eps0 / 4.0)?;
    let r1a = 2.0 * i1.value - i0.value;
    let r1b = 2.0 * i2.value - i1.value;
    let value = (8.0 * r1b - r1a) / 7.0;
    let quad_err = 4.0 * (i0.error_estimate + i1.error_estimate + i2.error_estimate);
    let extrapolation = (value - r1b).norm();
    let error_estimate = extrapolation + quad_err;
    let evaluations = i0.evaluations + i1.evaluations + i2.evaluations;
    let tol = cfg.target(value.norm());
    let result = QuadratureResult { value, error_estimate, evaluations, converged: error_estimate <= tol };
    if extrapolation > tol.max(10.0 * quad_err) {
        return Err(Error::Convergence { partial: QuadratureResult { converged: false, ..result } });
    }
    Ok(result)
}

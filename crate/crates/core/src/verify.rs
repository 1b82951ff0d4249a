//! Cross-checks between methods and models, collected into a report.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baeumer::{baeumer_cauchy, baeumer_closed, baeumer_integral_outer, outer_sign_calibration};
use crate::error::{domain, Error, Result};
use crate::quadrature::QuadratureConfig;
use crate::salpeter::{
    salpeter_closed, salpeter_closed_imaginary_time, salpeter_closed_with, salpeter_integral,
    salpeter_integral_outer_complex_time, HankelConvention, PropagatorQuery, HANKEL_CONVENTION,
};
use crate::series::{series_propagator, DEFAULT_ORDER};
use crate::ComplexScalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Scaling,
    Wick,
    Kg,
    Cross,
    All,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Scaling => "scaling",
            Suite::Wick => "wick",
            Suite::Kg => "kg",
            Suite::Cross => "cross",
            Suite::All => "all",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scaling" => Ok(Suite::Scaling),
            "wick" => Ok(Suite::Wick),
            "kg" => Ok(Suite::Kg),
            "cross" => Ok(Suite::Cross),
            "all" => Ok(Suite::All),
            _ => Err(domain(format!("unknown suite '{s}'"))),
        }
    }
}

/// One comparison. `passed` is always `deviation <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationCase {
    pub label: String,
    pub inputs: BTreeMap<String, f64>,
    pub relation: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ValidationCase {
    pub fn new(label: &str, inputs: &[(&str, f64)], relation: &str, deviation: f64, tolerance: f64) -> Self {
        ValidationCase {
            label: label.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            relation: relation.to_string(),
            deviation,
            tolerance,
            passed: deviation <= tolerance,
            note: None,
        }
    }

    fn failed(label: &str, inputs: &[(&str, f64)], relation: &str, tolerance: f64, err: &Error) -> Self {
        let mut c = ValidationCase::new(label, inputs, relation, f64::INFINITY, tolerance);
        c.note = Some(err.to_string());
        c
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub suite: Suite,
    pub cases: Vec<ValidationCase>,
    pub worst_deviation: f64,
    pub sign_calibrations: BTreeMap<String, f64>,
}

impl ValidationReport {
    pub fn new(suite: Suite, cases: Vec<ValidationCase>) -> Self {
        let mut r = ValidationReport { suite, cases, worst_deviation: 0.0, sign_calibrations: BTreeMap::new() };
        r.refresh();
        r
    }

    fn refresh(&mut self) {
        self.worst_deviation = self.cases.iter().map(|c| c.deviation).fold(0.0, f64::max);
        if self.cases.iter().any(|c| c.deviation.is_nan()) {
            self.worst_deviation = f64::INFINITY;
        }
    }

    /// Largest deviation expressed as a fraction of its own tolerance.
    pub fn worst_ratio(&self) -> f64 {
        self.cases.iter().map(|c| c.deviation / c.tolerance).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ValidationCase> {
        self.cases.iter().filter(|c| !c.passed)
    }

    fn merge(&mut self, other: ValidationReport) {
        self.cases.extend(other.cases);
        self.sign_calibrations.extend(other.sign_calibrations);
        self.refresh();
    }
}

fn rel(a: ComplexScalar, b: ComplexScalar) -> f64 {
    (a - b).norm() / b.norm()
}

pub const SCALING_TOLERANCE: f64 = 1e-9;

/// `G(lambda x, lambda t, m) = G(x, t, lambda m) / lambda` for both models.
/// `perturb` multiplies the left-hand side by `1 + perturb`.
pub fn check_scaling(m: f64, lambda: f64, points: &[(f64, f64)], perturb: f64) -> ValidationReport {
    let relation = "G(lx, lt, m) = G(x, t, lm) / l";
    let cases = points
        .par_iter()
        .flat_map_iter(|&(x, t)| {
            let inputs = [("x", x), ("t", t), ("m", m), ("lambda", lambda)];
            let lhs_q = PropagatorQuery::new(lambda * x, lambda * t, m);
            let rhs_q = PropagatorQuery::new(x, t, lambda * m);
            let (lhs_q, rhs_q) = match (lhs_q, rhs_q) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    return vec![ValidationCase::failed("scaling", &inputs, relation, SCALING_TOLERANCE, &e)];
                }
            };
            let mut out = Vec::with_capacity(2);
            let skipped = lhs_q.on_light_cone() || rhs_q.on_light_cone();
            out.push(if skipped {
                ValidationCase::new("scaling/salpeter", &inputs, relation, 0.0, SCALING_TOLERANCE)
                    .with_note("skipped: on the light cone")
            } else {
                match (salpeter_closed(&lhs_q), salpeter_closed(&rhs_q)) {
                    (Ok(a), Ok(b)) => ValidationCase::new(
                        "scaling/salpeter",
                        &inputs,
                        relation,
                        rel(a * (1.0 + perturb), b / lambda),
                        SCALING_TOLERANCE,
                    ),
                    (Err(e), _) | (_, Err(e)) => {
                        ValidationCase::failed("scaling/salpeter", &inputs, relation, SCALING_TOLERANCE, &e)
                    }
                }
            });
            out.push(match (baeumer_closed(&lhs_q), baeumer_closed(&rhs_q)) {
                (Ok(a), Ok(b)) => ValidationCase::new(
                    "scaling/baeumer",
                    &inputs,
                    relation,
                    (a * (1.0 + perturb) - b / lambda).abs() / (b / lambda).abs(),
                    SCALING_TOLERANCE,
                ),
                (Err(e), _) | (_, Err(e)) => {
                    ValidationCase::failed("scaling/baeumer", &inputs, relation, SCALING_TOLERANCE, &e)
                }
            });
            out
        })
        .collect();
    ValidationReport::new(Suite::Scaling, cases)
}

/// Magnitude and phase mismatch of `a` against `b`, combined as the larger.
fn magnitude_phase_deviation(a: ComplexScalar, b: ComplexScalar) -> (f64, f64) {
    let mag = (a.norm() - b.norm()).abs() / b.norm();
    let phase = (a / b).arg().abs();
    (mag, phase)
}

pub const WICK_TOLERANCE: f64 = 1e-6;
pub const WICK_CLOSED_TOLERANCE: f64 = 1e-12;

/// Diffusion kernel at time `t` against the Salpeter kernel at `t -> -i t`.
///
/// Each point gives three cases: the two outer integrals, the two closed
/// forms, and (at `m = 0`) the two massless formulas. Magnitude and phase are
/// compared separately so a global phase slip is visible as such.
pub fn check_wick(points: &[(f64, f64, f64)], cfg: &QuadratureConfig, perturb: f64) -> ValidationReport {
    let relation = "G_B(x, t) = G_S(x, -i t)";
    let mut sign = BTreeMap::new();
    let calibration = outer_sign_calibration();
    if let Ok(c) = &calibration {
        sign.insert("baeumer_outer".to_string(), c.sigma);
    }
    let cases = points
        .par_iter()
        .flat_map_iter(|&(x, t, m)| {
            let inputs = [("x", x), ("t", t), ("m", m)];
            let mut out = Vec::new();
            let q = match PropagatorQuery::new(x, t, m) {
                Ok(q) if q.x > q.t => q,
                Ok(_) => {
                    let e = domain("wick check needs x > t");
                    return vec![ValidationCase::failed("wick/integral", &inputs, relation, WICK_TOLERANCE, &e)];
                }
                Err(e) => return vec![ValidationCase::failed("wick/integral", &inputs, relation, WICK_TOLERANCE, &e)],
            };
            let b = baeumer_integral_outer(&q, cfg);
            let s = salpeter_integral_outer_complex_time(x, Complex64::new(0.0, -t), m, cfg);
            out.push(match (b, s) {
                (Ok(b), Ok(s)) => {
                    let (mag, phase) = magnitude_phase_deviation(b.value * (1.0 + perturb), s.value);
                    ValidationCase::new("wick/integral", &inputs, relation, mag.max(phase), WICK_TOLERANCE)
                        .with_note(format!("magnitude {mag:.3e}, phase {phase:.3e}"))
                }
                (Err(e), _) | (_, Err(e)) => {
                    ValidationCase::failed("wick/integral", &inputs, relation, WICK_TOLERANCE, &e)
                }
            });
            let b = baeumer_closed(&q);
            let s = salpeter_closed_imaginary_time(x, t, m);
            out.push(match (b, s) {
                (Ok(b), Ok(s)) => {
                    let (mag, phase) = magnitude_phase_deviation(Complex64::new(b * (1.0 + perturb), 0.0), s);
                    ValidationCase::new("wick/closed", &inputs, relation, mag.max(phase), WICK_CLOSED_TOLERANCE)
                        .with_note(format!("magnitude {mag:.3e}, phase {phase:.3e}"))
                }
                (Err(e), _) | (_, Err(e)) => {
                    ValidationCase::failed("wick/closed", &inputs, relation, WICK_CLOSED_TOLERANCE, &e)
                }
            });
            if m == 0.0 {
                // i t / (pi (x^2 - t^2)) at t -> -i t
                let tc = Complex64::new(0.0, -t);
                let s = Complex64::i() * tc / (PI * (x * x - tc * tc));
                let b = Complex64::new(baeumer_cauchy(x, t) * (1.0 + perturb), 0.0);
                let (mag, phase) = magnitude_phase_deviation(b, s);
                out.push(ValidationCase::new("wick/massless", &inputs, relation, mag.max(phase), WICK_CLOSED_TOLERANCE));
            }
            out
        })
        .collect();
    let mut report = ValidationReport::new(Suite::Wick, cases);
    if let Err(e) = calibration {
        report.cases.push(ValidationCase::failed("wick/sign", &[], "outer sign calibration", 0.0, &e));
        report.refresh();
    }
    report.sign_calibrations = sign;
    report
}

/// Klein-Gordon operator applied to the phase-stripped closed form with the
/// five-point cross stencil at spacing `h`, and the value it is compared to
/// (`m^2 |F|`, or `|F_tt|` when `m = 0`).
pub fn klein_gordon_residual(x: f64, t: f64, m: f64, h: f64) -> Result<(f64, f64)> {
    let f = |x: f64, t: f64| -> Result<ComplexScalar> {
        let g = salpeter_closed(&PropagatorQuery::new(x, t, m)?)?;
        Ok(g * Complex64::from_polar(1.0, -m * t))
    };
    let c = f(x, t)?;
    let fxx = (f(x + h, t)? - 2.0 * c + f(x - h, t)?) / (h * h);
    let ftt = (f(x, t + h)? - 2.0 * c + f(x, t - h)?) / (h * h);
    let residual = (ftt - fxx + m * m * c).norm();
    let scale = if m > 0.0 { m * m * c.norm() } else { ftt.norm() };
    Ok((residual, scale))
}

pub const KG_ORDER_TOLERANCE: f64 = 0.2;
pub const KG_RESIDUAL_TOLERANCE: f64 = 1e-4;

/// Convergence order and finest-step residual of the Klein-Gordon identity.
pub fn check_klein_gordon(points: &[(f64, f64)], m: f64, h_list: &[f64], perturb: f64) -> ValidationReport {
    let mut hs = h_list.to_vec();
    hs.sort_by(f64::total_cmp);
    let cases = points
        .par_iter()
        .flat_map_iter(|&(x, t)| {
            let inputs = [("x", x), ("t", t), ("m", m)];
            let relation_o = "(-d_xx + d_tt + m^2) F = O(h^2)";
            let relation_r = "|(-d_xx + d_tt + m^2) F| <= 1e-4 m^2 |F| at the finest h";
            let h_max = hs.last().copied().unwrap_or(0.0);
            if hs.len() < 2 || (x - t).abs() <= 0.2 * t || x <= 5.0 * h_max || t <= 5.0 * h_max {
                let e = domain("need two or more steps and a point off the cone, away from the axes");
                return vec![ValidationCase::failed("kg/order", &inputs, relation_o, KG_ORDER_TOLERANCE, &e)];
            }
            let mut log_h = Vec::new();
            let mut log_r = Vec::new();
            let mut finest = None;
            for &h in &hs {
                match klein_gordon_residual(x, t, m, h) {
                    Ok((r, scale)) => {
                        // perturbation here stands for a mass-term error
                        let r = r + perturb * scale;
                        if finest.is_none() {
                            finest = Some(r / scale);
                        }
                        log_h.push(h.ln());
                        log_r.push(r.ln());
                    }
                    Err(e) => return vec![ValidationCase::failed("kg/order", &inputs, relation_o, KG_ORDER_TOLERANCE, &e)],
                }
            }
            let finest = finest.unwrap_or(f64::INFINITY);
            if m == 0.0 {
                // the massless kernel is a sum of travelling waves, which the
                // cross stencil annihilates exactly: only rounding is left
                return vec![ValidationCase::new("kg/residual", &inputs, relation_r, finest, KG_RESIDUAL_TOLERANCE)
                    .with_note("massless: stencil exact, order not fitted")];
            }
            let order = crate::baeumer::least_squares_slope(&log_h, &log_r);
            vec![
                ValidationCase::new("kg/order", &inputs, relation_o, (order - 2.0).abs(), KG_ORDER_TOLERANCE)
                    .with_note(format!("fitted order {order:.4}")),
                ValidationCase::new("kg/residual", &inputs, relation_r, finest, KG_RESIDUAL_TOLERANCE),
            ]
        })
        .collect();
    ValidationReport::new(Suite::Kg, cases)
}

/// Sweep of the cross-method comparison: `t = 2^n / 100` for
/// `n = 0..=n_max` and `x_points` values of `x` spread over `[0, 5t]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossGrid {
    pub n_max: u32,
    pub x_points: usize,
    /// Points with `|x - t| < cone_exclusion * t` are left out.
    pub cone_exclusion: f64,
}

impl Default for CrossGrid {
    fn default() -> Self {
        CrossGrid { n_max: 8, x_points: 51, cone_exclusion: 0.05 }
    }
}

impl CrossGrid {
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for n in 0..=self.n_max {
            let t = 2f64.powi(n as i32) / 100.0;
            for i in 0..self.x_points {
                let x = if self.x_points == 1 { 0.0 } else { 5.0 * t * i as f64 / (self.x_points - 1) as f64 };
                if (x - t).abs() >= self.cone_exclusion * t {
                    out.push((x, t));
                }
            }
        }
        out
    }
}

pub const CROSS_TOLERANCE: f64 = 1e-6;
pub const CROSS_MASSLESS_TOLERANCE: f64 = 1e-8;
pub const CROSS_SERIES_TOLERANCE: f64 = 1e-3;

/// Closed form against the integral representation (and the series where
/// `mt <= 1` and `mx <= 1`). `perturb` multiplies the integral.
pub fn cross_validate(grid: &CrossGrid, m_list: &[f64], cfg: &QuadratureConfig, perturb: f64) -> ValidationReport {
    let points = grid.points();
    let jobs: Vec<(f64, f64, f64)> =
        m_list.iter().flat_map(|&m| points.iter().map(move |&(x, t)| (x, t, m))).collect();
    let cases = jobs
        .par_iter()
        .flat_map_iter(|&(x, t, m)| {
            let inputs = [("x", x), ("t", t), ("m", m)];
            let tol = if m == 0.0 { CROSS_MASSLESS_TOLERANCE } else { CROSS_TOLERANCE };
            let relation = "closed = integral";
            let q = match PropagatorQuery::new(x, t, m) {
                Ok(q) => q,
                Err(e) => return vec![ValidationCase::failed("cross/integral", &inputs, relation, tol, &e)],
            };
            let closed = match salpeter_closed(&q) {
                Ok(c) => c,
                Err(e) => return vec![ValidationCase::failed("cross/integral", &inputs, relation, tol, &e)],
            };
            let mut out = vec![match salpeter_integral(&q, cfg) {
                Ok(r) => ValidationCase::new("cross/integral", &inputs, relation, rel(r.value * (1.0 + perturb), closed), tol),
                Err(e) => ValidationCase::failed("cross/integral", &inputs, relation, tol, &e),
            }];
            if m > 0.0 && m * t <= 1.0 && m * x <= 1.0 {
                let relation = "closed = series";
                out.push(match series_propagator(x, t, m, DEFAULT_ORDER) {
                    Ok(s) => ValidationCase::new("cross/series", &inputs, relation, rel(s.value, closed), CROSS_SERIES_TOLERANCE)
                        .with_note(format!("order {}", s.order_used)),
                    Err(e) => ValidationCase::failed("cross/series", &inputs, relation, CROSS_SERIES_TOLERANCE, &e),
                });
            }
            out
        })
        .collect();
    ValidationReport::new(Suite::Cross, cases)
}

/// Point used to pick the Hankel convention inside the cone.
pub const HANKEL_CALIBRATION_POINT: (f64, f64, f64) = (0.5, 1.0, 1.0);

/// Sign of the Hankel argument that reproduces the inner integral at
/// [`HANKEL_CALIBRATION_POINT`]: `-1` for the conjugated (negative argument)
/// form, `+1` for the plain one.
pub fn hankel_calibration(cfg: &QuadratureConfig) -> Result<f64> {
    let (x, t, m) = HANKEL_CALIBRATION_POINT;
    let q = PropagatorQuery::new(x, t, m)?;
    let reference = salpeter_integral(&q, cfg)?.value;
    let neg = rel(salpeter_closed_with(&q, HankelConvention::NegativeArgument)?, reference);
    let pos = rel(salpeter_closed_with(&q, HankelConvention::PositiveArgument)?, reference);
    if neg.min(pos) > 1e-6 {
        return Err(Error::SignCalibration(format!("neither Hankel convention matches (errors {neg:e}, {pos:e})")));
    }
    Ok(if neg < pos { -1.0 } else { 1.0 })
}

/// Settings shared by the canned suites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub quadrature: QuadratureConfig,
    /// Relative fault injected into one side of every comparison.
    pub perturb: f64,
    pub cross_grid: CrossGrid,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { quadrature: QuadratureConfig::default(), perturb: 0.0, cross_grid: CrossGrid::default() }
    }
}

const SCALING_POINTS: [(f64, f64); 8] =
    [(0.5, 1.0), (3.0, 1.0), (0.1, 2.0), (2.5, 0.7), (0.0, 1.5), (4.0, 0.3), (0.9, 1.2), (1.7, 1.1)];

const WICK_POINTS: [(f64, f64, f64); 6] =
    [(2.0, 1.0, 1.0), (3.0, 0.5, 1.0), (1.5, 1.0, 0.5), (5.0, 2.0, 2.0), (2.0, 1.0, 0.0), (0.8, 0.3, 1.0)];

const KG_POINTS: [(f64, f64); 4] = [(0.4, 1.0), (2.0, 1.0), (0.3, 2.0), (3.0, 1.5)];

const KG_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Run one of the canned suites.
pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<ValidationReport> {
    opts.quadrature.validate()?;
    let p = opts.perturb;
    let mut report = ValidationReport::new(suite, Vec::new());
    if matches!(suite, Suite::Scaling | Suite::All) {
        for lambda in [0.5, 2.0, 10.0] {
            report.merge(check_scaling(1.0, lambda, &SCALING_POINTS, p));
        }
        report.merge(check_scaling(0.5, 10.0, &[(3.0, 1.0)], p));
    }
    if matches!(suite, Suite::Wick | Suite::All) {
        report.merge(check_wick(&WICK_POINTS, &opts.quadrature, p));
    }
    if matches!(suite, Suite::Kg | Suite::All) {
        report.merge(check_klein_gordon(&KG_POINTS, 1.0, &KG_STEPS, p));
        report.merge(check_klein_gordon(&KG_POINTS, 0.0, &KG_STEPS, p));
    }
    if matches!(suite, Suite::Cross | Suite::All) {
        report.merge(cross_validate(&opts.cross_grid, &[0.0, 1.0], &opts.quadrature, p));
        match hankel_calibration(&opts.quadrature) {
            Ok(s) => {
                report.sign_calibrations.insert("salpeter_hankel_argument".to_string(), s);
                let expected = match HANKEL_CONVENTION {
                    HankelConvention::NegativeArgument => -1.0,
                    HankelConvention::PositiveArgument => 1.0,
                };
                report.cases.push(ValidationCase::new(
                    "cross/hankel",
                    &[],
                    "calibrated Hankel sign = configured convention",
                    (s - expected).abs(),
                    0.0,
                ));
            }
            Err(e) => report.cases.push(ValidationCase::failed("cross/hankel", &[], "Hankel calibration", 0.0, &e)),
        }
        report.refresh();
    }
    report.suite = suite;
    Ok(report)
}

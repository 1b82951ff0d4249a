//! One-shot evolution of a compact initial wave function by convolution
//! with the Salpeter propagator.
//!
//! The kernel has first-order poles at `x' = +-t`. It is split as
//! `G = S + R` with `S = A/(t - x') + A/(t + x')`, `A = e^{imt}/(2 pi i)`:
//! `S psi0` goes through [`principal_value`], the remainder `R` is at most
//! logarithmic and is integrated directly, and the half residues
//! `e^{imt} (psi0(x - t) + psi0(x + t)) / 2` are added back.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_finite_points, principal_value, QuadratureConfig, QuadratureResult};
use crate::salpeter::{salpeter_closed, PropagatorQuery};
use crate::ComplexScalar;

/// Uniform grid `x_min, ..., x_max` with `n_points` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn nodes(&self) -> Vec<f64> {
        let n = self.n_points;
        if n == 1 {
            return vec![self.x_min];
        }
        let d = (n - 1) as f64;
        // written so that a symmetric range gives exactly mirrored nodes
        (0..n).map(|i| (self.x_min * (n - 1 - i) as f64 + self.x_max * i as f64) / d).collect()
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }
}

/// Default number of grid nodes.
pub const DEFAULT_POINTS: usize = 4001;

/// Grid over `+-(t + delta + margin)`. The margin holds the slowly decaying
/// tails: 20 for `m = 0` (where `|psi|^2 ~ x^-4`), `min(20, 8/m)` otherwise.
pub fn default_grid(delta: f64, t: f64, m: f64) -> GridSpec {
    let margin = if m > 0.0 { (8.0 / m).min(20.0) } else { 20.0 };
    let half = t + delta + margin;
    GridSpec { x_min: -half, x_max: half, n_points: DEFAULT_POINTS }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveState {
    pub grid: Vec<f64>,
    pub amplitudes: Vec<ComplexScalar>,
    pub time: f64,
    pub mass: f64,
    pub delta: f64,
}

/// `psi0(x) = sqrt(2/delta) cos(pi x / delta)` on `|x| < delta/2`, zero elsewhere.
pub fn initial_cosine_bump(delta: f64) -> impl Fn(f64) -> f64 + Copy + Send + Sync {
    let amp = (2.0 / delta).sqrt();
    move |x: f64| {
        if x.abs() < 0.5 * delta {
            amp * (PI * x / delta).cos()
        } else {
            0.0
        }
    }
}

/// Trapezoid sum of `|psi|^2` over the grid.
pub fn total_probability(state: &WaveState) -> f64 {
    let n = state.grid.len();
    if n < 2 {
        return 0.0;
    }
    let h = (state.grid[n - 1] - state.grid[0]) / (n - 1) as f64;
    let p: Vec<f64> = state.amplitudes.iter().map(|a| a.norm_sqr()).collect();
    h * (p.iter().sum::<f64>() - 0.5 * (p[0] + p[n - 1]))
}

fn check_grid(grid: &GridSpec, reach: f64) -> Result<()> {
    if grid.n_points < 2 || !(grid.x_min < grid.x_max) || !grid.x_min.is_finite() || !grid.x_max.is_finite() {
        return Err(Error::Grid(format!("need at least two nodes on a finite range, got {grid:?}")));
    }
    if grid.x_min > -reach || grid.x_max < reach {
        return Err(Error::Grid(format!(
            "grid [{}, {}] does not cover the evolved support [-{reach}, {reach}]",
            grid.x_min, grid.x_max
        )));
    }
    Ok(())
}

/// Evolve the cosine bump of width `delta` to time `t`.
pub fn evolve(delta: f64, t: f64, m: f64, grid: &GridSpec, cfg: &QuadratureConfig) -> Result<WaveState> {
    evolve_impl(delta, t, m, grid, cfg, true).map(|(s, _)| s)
}

/// Like [`evolve`], but a quadrature that misses its tolerance contributes
/// its best estimate instead of failing. Also returns how many grid values
/// are affected.
pub fn evolve_lenient(
    delta: f64,
    t: f64,
    m: f64,
    grid: &GridSpec,
    cfg: &QuadratureConfig,
) -> Result<(WaveState, usize)> {
    evolve_impl(delta, t, m, grid, cfg, false)
}

fn evolve_impl(
    delta: f64,
    t: f64,
    m: f64,
    grid: &GridSpec,
    cfg: &QuadratureConfig,
    strict: bool,
) -> Result<(WaveState, usize)> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(domain(format!("delta must be positive, got {delta}")));
    }
    if !(t >= 0.0 && t.is_finite() && m >= 0.0 && m.is_finite()) {
        return Err(domain(format!("evolution needs t >= 0 and m >= 0 (t={t}, m={m})")));
    }
    cfg.validate()?;
    check_grid(grid, t + 0.5 * delta)?;
    let nodes = grid.nodes();
    let psi0 = initial_cosine_bump(delta);
    if t == 0.0 {
        let amplitudes = nodes.iter().map(|&x| Complex64::new(psi0(x), 0.0)).collect();
        return Ok((WaveState { grid: nodes, amplitudes, time: t, mass: m, delta }, 0));
    }

    // psi0 is even, so the state is too: evaluate once per |x|
    let mut keys: Vec<f64> = nodes.iter().map(|x| x.abs()).collect();
    keys.sort_by(f64::total_cmp);
    keys.dedup();
    let values: Vec<(ComplexScalar, bool)> =
        keys.par_iter().map(|&x| point(x, delta, t, m, cfg, strict)).collect::<Result<_>>()?;
    let table: HashMap<u64, (ComplexScalar, bool)> = keys.iter().map(|k| k.to_bits()).zip(values).collect();
    let looked_up: Vec<(ComplexScalar, bool)> = nodes.iter().map(|x| table[&x.abs().to_bits()]).collect();
    let unconverged = looked_up.iter().filter(|v| !v.1).count();
    let amplitudes: Vec<ComplexScalar> = looked_up.into_iter().map(|v| v.0).collect();
    if let Some(i) = amplitudes.iter().position(|a| !(a.re.is_finite() && a.im.is_finite())) {
        return Err(Error::Grid(format!("non-finite amplitude at x = {}", nodes[i])));
    }
    Ok((WaveState { grid: nodes, amplitudes, time: t, mass: m, delta }, unconverged))
}

/// Value of the evolved wave function at one point.
pub fn evolve_point(x: f64, delta: f64, t: f64, m: f64, cfg: &QuadratureConfig) -> Result<ComplexScalar> {
    point(x, delta, t, m, cfg, true).map(|v| v.0)
}

fn settle(r: Result<QuadratureResult>, strict: bool) -> Result<(ComplexScalar, bool)> {
    match r {
        Ok(q) => Ok((q.value, true)),
        Err(e) if !strict => match e.partial() {
            Some(p) => Ok((p.value, false)),
            None => Err(e),
        },
        Err(e) => Err(e),
    }
}

fn point(x: f64, delta: f64, t: f64, m: f64, cfg: &QuadratureConfig, strict: bool) -> Result<(ComplexScalar, bool)> {
    let psi0 = initial_cosine_bump(delta);
    let phase = Complex64::from_polar(1.0, m * t);
    let residues = 0.5 * phase * (psi0(x - t) + psi0(x + t));

    let (a, b) = (x - 0.5 * delta, x + 0.5 * delta);
    let guard = 1e-9 * delta;
    let poles: Vec<f64> = [-t, t].into_iter().filter(|&p| p > a + guard && p < b - guard).collect();
    let kernel = move |y: f64| salpeter_closed(&PropagatorQuery { x: y.abs(), t, m });

    let mut breaks = vec![a];
    breaks.extend([-t, t].into_iter().filter(|&p| p > a && p < b));
    breaks.push(b);

    if poles.is_empty() {
        // poles sitting on the support edge are cancelled by the zero of psi0
        let r = integrate_finite_points(
            |y: f64| match kernel(y) {
                Ok(g) => g * psi0(x - y),
                Err(_) => Complex64::new(0.0, 0.0),
            },
            &breaks,
            cfg,
        );
        let (v, ok) = settle(r, strict)?;
        return Ok((v + residues, ok));
    }

    let amp = phase / Complex64::new(0.0, 2.0 * PI);
    let singular = move |y: f64| amp * (1.0 / (t - y) + 1.0 / (t + y));
    let (pv, ok_pv) = settle(principal_value(|y: f64| singular(y) * psi0(x - y), &poles, a, b, cfg), strict)?;
    if m == 0.0 {
        return Ok((pv + residues, ok_pv));
    }
    let remainder = integrate_finite_points(
        |y: f64| match kernel(y) {
            Ok(g) => (g - singular(y)) * psi0(x - y),
            // inside the cone band the remainder is only logarithmic
            Err(_) => Complex64::new(0.0, 0.0),
        },
        &breaks,
        cfg,
    );
    let (rem, ok_rem) = settle(remainder, strict)?;
    Ok((pv + rem + residues, ok_pv && ok_rem))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_shape() {
        let f = initial_cosine_bump(2.0);
        assert!((f(0.0) - 1.0).abs() < 1e-15);
        assert!(f(1.0).abs() < 1e-15 && f(-1.0).abs() < 1e-15);
        assert_eq!(f(1.5), 0.0);
    }

    #[test]
    fn symmetric_nodes() {
        let g = GridSpec { x_min: -3.0, x_max: 3.0, n_points: 101 };
        let n = g.nodes();
        for i in 0..n.len() {
            assert_eq!(n[i], -n[n.len() - 1 - i]);
        }
    }

    #[test]
    fn identity_at_zero_time() {
        let g = GridSpec { x_min: -2.0, x_max: 2.0, n_points: 4001 };
        let s = evolve(1.0, 0.0, 1.0, &g, &QuadratureConfig::default()).unwrap();
        assert!((total_probability(&s) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn short_grid_rejected() {
        let g = GridSpec { x_min: -1.0, x_max: 1.0, n_points: 11 };
        assert!(matches!(evolve(1.0, 2.0, 1.0, &g, &QuadratureConfig::default()), Err(Error::Grid(_))));
    }
}

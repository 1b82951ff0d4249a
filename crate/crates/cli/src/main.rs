use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use relprop_core::baeumer::{
    baeumer_cauchy, baeumer_closed, baeumer_gaussian_limit, baeumer_integral_inner, diffusion_scan,
};
use relprop_core::quadrature::{QuadratureConfig, QuadratureResult};
use relprop_core::salpeter::{
    salpeter_classical, salpeter_closed, salpeter_integral, salpeter_massless, Method, Model, PropagatorQuery,
};
use relprop_core::series::{series_propagator, DEFAULT_ORDER};
use relprop_core::verify::{run_suite, Suite, SuiteOptions};
use relprop_core::wavefunc::{default_grid, evolve, evolve_lenient, total_probability, GridSpec};
use relprop_core::Error;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

const CSV_HEADER: &str = "model,method,m,t,x,re,im,abs,phase,err_estimate,flags";

#[derive(Parser)]
#[command(name = "relprop", version, about = "Relativistic propagators: tables, wave evolution, diffusion scans and self-checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the propagator over a (t, x) grid
    Propagator(PropagatorArgs),
    /// Evolve the cosine bump and tabulate the wave function
    Wavefunction(WaveArgs),
    /// Peak height and second moment of the diffusion kernel against t
    Moments(MomentsArgs),
    /// Run a validation suite and write the report as JSON
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum Spacing {
    Linear,
    Log,
}

/// Flags of `propagator`. A `--config` file uses the same names.
#[derive(Args, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct PropagatorArgs {
    /// JSON file with defaults for any of these flags
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<Model>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long, allow_hyphen_values = true)]
    m: Option<f64>,
    /// Single time (alternative to --t-min/--t-max)
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<f64>,
    #[arg(long)]
    t_count: Option<usize>,
    #[arg(long, value_enum)]
    t_spacing: Option<Spacing>,
    /// Single position
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x_max: Option<f64>,
    #[arg(long)]
    x_count: Option<usize>,
    /// Positions as multiples of t, `a:b:n` (default 0:5:256)
    #[arg(long)]
    x_rel: Option<String>,
    /// Truncation order for the series method
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    max_subdivisions: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Fail with exit status 3 when a quadrature misses its tolerance
    #[arg(long)]
    #[serde(default)]
    strict: bool,
}

#[derive(Args, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct WaveArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Width of the initial cosine bump
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x_max: Option<f64>,
    #[arg(long)]
    n_points: Option<usize>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    max_subdivisions: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    #[serde(default)]
    strict: bool,
}

#[derive(Args, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct MomentsArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    t_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<f64>,
    #[arg(long)]
    points_per_decade: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    m: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    max_subdivisions: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ValidateArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// scaling, wick, kg, cross or all
    #[arg(long)]
    suite: Option<Suite>,
    /// Write the report here instead of standard output
    #[arg(long)]
    json: Option<PathBuf>,
    /// Multiply one side of every comparison by 1 + p
    #[arg(long, allow_hyphen_values = true)]
    perturb: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    max_subdivisions: Option<usize>,
}

/// Fill every unset field of `$flags` from `$file`.
macro_rules! overlay {
    ($flags:ident, $file:ident; $($f:ident),* $(,)?) => {
        $( if $flags.$f.is_none() { $flags.$f = $file.$f; } )*
    };
}

enum Failure {
    Validation,
    Usage(String),
    Numerical(String),
    Io(io::Error),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn read_config<T: for<'de> Deserialize<'de> + Default>(path: &Option<PathBuf>) -> Result<T, Failure> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("bad config {}: {e}", path.display())))
}

fn quadrature(abs_tol: Option<f64>, rel_tol: Option<f64>, max_subdivisions: Option<usize>) -> Result<QuadratureConfig, Failure> {
    let d = QuadratureConfig::default();
    let cfg = QuadratureConfig {
        abs_tol: abs_tol.unwrap_or(d.abs_tol),
        rel_tol: rel_tol.unwrap_or(d.rel_tol),
        max_subdivisions: max_subdivisions.unwrap_or(d.max_subdivisions),
        ..d
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn raw(v: f64) -> Option<Box<RawValue>> {
    if v.is_finite() {
        RawValue::from_string(num(v)).ok()
    } else {
        None
    }
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

// ---------------------------------------------------------------- propagator

#[derive(Debug, Clone, Copy, Serialize)]
struct TGrid {
    min: f64,
    max: f64,
    count: usize,
    spacing: Spacing,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
enum XMode {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, Copy, Serialize)]
struct XGrid {
    mode: XMode,
    min: f64,
    max: f64,
    count: usize,
}

#[derive(Debug, Clone, Serialize)]
struct PropagatorRun {
    command: &'static str,
    model: Model,
    method: Method,
    m: f64,
    t_grid: TGrid,
    x_grid: XGrid,
    order: usize,
    quadrature: QuadratureConfig,
    strict: bool,
    format: Format,
    #[serde(skip)]
    output: Option<PathBuf>,
}

fn spread(min: f64, max: f64, count: usize, spacing: Spacing) -> Vec<f64> {
    if count == 1 {
        return vec![min];
    }
    let d = (count - 1) as f64;
    (0..count)
        .map(|i| match (i, spacing) {
            (0, _) => min,
            (i, _) if i == count - 1 => max,
            (i, Spacing::Linear) => min + (max - min) * i as f64 / d,
            (i, Spacing::Log) => (min.ln() + (max.ln() - min.ln()) * i as f64 / d).exp(),
        })
        .collect()
}

fn parse_x_rel(s: &str) -> Result<XGrid, Failure> {
    let bad = || usage(format!("--x-rel expects a:b:n, got '{s}'"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    Ok(XGrid { mode: XMode::Relative, min: a, max: b, count: n })
}

fn resolve_propagator(mut a: PropagatorArgs) -> Result<PropagatorRun, Failure> {
    let file: PropagatorArgs = read_config(&a.config)?;
    a.strict |= file.strict;
    overlay!(a, file; model, method, m, t, t_min, t_max, t_count, t_spacing, x, x_min, x_max, x_count,
        x_rel, order, abs_tol, rel_tol, max_subdivisions, output, format);

    let model = a.model.unwrap_or(Model::Salpeter);
    let method = a.method.unwrap_or(Method::Closed);
    let m = a.m.unwrap_or(1.0);
    if !(m >= 0.0 && m.is_finite()) {
        return Err(usage(format!("m must be a non-negative number, got {m}")));
    }
    let spacing = a.t_spacing.unwrap_or(Spacing::Linear);
    let t_grid = match (a.t, a.t_min, a.t_max) {
        (Some(t), None, None) => TGrid { min: t, max: t, count: 1, spacing },
        (None, Some(lo), Some(hi)) => {
            TGrid { min: lo, max: hi, count: a.t_count.unwrap_or(if lo == hi { 1 } else { 9 }), spacing }
        }
        (None, None, None) => TGrid { min: 1.0, max: 1.0, count: 1, spacing },
        _ => return Err(usage("give either --t or both --t-min and --t-max")),
    };
    if t_grid.count == 0 || !(t_grid.min > 0.0 && t_grid.max >= t_grid.min && t_grid.max.is_finite()) {
        return Err(usage("time grid needs 0 < t-min <= t-max and a count of at least 1"));
    }
    let given = [a.x.is_some(), a.x_min.is_some() || a.x_max.is_some() || a.x_count.is_some(), a.x_rel.is_some()];
    if given.iter().filter(|g| **g).count() > 1 {
        return Err(usage("use only one of --x, --x-min/--x-max/--x-count, --x-rel"));
    }
    let x_grid = if let Some(x) = a.x {
        XGrid { mode: XMode::Absolute, min: x, max: x, count: 1 }
    } else if given[1] {
        let (Some(lo), Some(hi)) = (a.x_min, a.x_max) else {
            return Err(usage("--x-min and --x-max go together"));
        };
        XGrid { mode: XMode::Absolute, min: lo, max: hi, count: a.x_count.unwrap_or(if lo == hi { 1 } else { 256 }) }
    } else {
        parse_x_rel(a.x_rel.as_deref().unwrap_or("0:5:256"))?
    };
    if x_grid.count == 0 || !(x_grid.min <= x_grid.max) || !x_grid.max.is_finite() || !x_grid.min.is_finite() {
        return Err(usage("position grid needs min <= max and a count of at least 1"));
    }
    match (model, method) {
        (Model::Baeumer, Method::Series) => return Err(usage("the series method exists only for the salpeter model")),
        (_, Method::Massless) if m != 0.0 => return Err(usage("the massless method needs --m 0")),
        (_, Method::Series | Method::Classical) if m == 0.0 => {
            return Err(usage(format!("the {method} method needs m > 0")));
        }
        _ => {}
    }
    let order = a.order.unwrap_or(DEFAULT_ORDER);
    Ok(PropagatorRun {
        command: "propagator",
        model,
        method,
        m,
        t_grid,
        x_grid,
        order,
        quadrature: quadrature(a.abs_tol, a.rel_tol, a.max_subdivisions)?,
        strict: a.strict,
        format: a.format.unwrap_or(Format::Csv),
        output: a.output,
    })
}

struct Row {
    t: f64,
    x: f64,
    value: Option<Complex64>,
    err: Option<f64>,
    flags: &'static str,
}

fn quadrature_value(r: relprop_core::Result<QuadratureResult>, strict: bool) -> Result<(Option<Complex64>, Option<f64>, &'static str), Failure> {
    match r {
        Ok(q) => Ok((Some(q.value), Some(q.error_estimate), "")),
        Err(Error::LightConeSingularity { .. }) => Ok((None, None, "singular")),
        Err(e) => match e.partial() {
            Some(p) if !strict => Ok((Some(p.value), Some(p.error_estimate), "unconverged")),
            _ => Err(Failure::Numerical(e.to_string())),
        },
    }
}

fn exact_value(r: relprop_core::Result<Complex64>, strict: bool) -> Result<(Option<Complex64>, Option<f64>, &'static str), Failure> {
    match r {
        Ok(v) => Ok((Some(v), None, "")),
        Err(Error::LightConeSingularity { .. } | Error::Singularity(_)) => Ok((None, None, "singular")),
        Err(e) if strict => Err(Failure::Numerical(e.to_string())),
        Err(_) => Ok((None, None, "error")),
    }
}

fn evaluate(run: &PropagatorRun, t: f64, x: f64) -> Result<Row, Failure> {
    let q = PropagatorQuery::new(x, t, run.m).map_err(|e| usage(e.to_string()))?;
    let real = |r: relprop_core::Result<f64>| r.map(|v| Complex64::new(v, 0.0));
    let cfg = &run.quadrature;
    let (value, err, flags) = match (run.model, run.method) {
        (Model::Salpeter, Method::Closed) => exact_value(salpeter_closed(&q), run.strict)?,
        (Model::Salpeter, Method::Integral) => quadrature_value(salpeter_integral(&q, cfg), run.strict)?,
        (Model::Salpeter, Method::Series) => {
            if q.on_light_cone() {
                (None, None, "singular")
            } else {
                match series_propagator(x, t, run.m, run.order) {
                    Ok(s) => (Some(s.value), Some(s.last_term_magnitude), ""),
                    Err(e) => exact_value(Err(e), run.strict)?,
                }
            }
        }
        (Model::Salpeter, Method::Classical) => exact_value(salpeter_classical(&q), run.strict)?,
        (Model::Salpeter, Method::Massless) => exact_value(salpeter_massless(&q), run.strict)?,
        (Model::Baeumer, Method::Closed) => exact_value(real(baeumer_closed(&q)), run.strict)?,
        (Model::Baeumer, Method::Integral) => quadrature_value(baeumer_integral_inner(&q, cfg), run.strict)?,
        (Model::Baeumer, Method::Classical) => exact_value(real(baeumer_gaussian_limit(&q)), run.strict)?,
        (Model::Baeumer, Method::Massless) => (Some(Complex64::new(baeumer_cauchy(q.x, t), 0.0)), None, ""),
        (Model::Baeumer, Method::Series) => unreachable!("rejected while resolving"),
    };
    Ok(Row { t, x, value, err, flags })
}

/// Phase reported as `1/2 - arg(G)/pi`.
fn phase_column(v: Complex64) -> f64 {
    0.5 - v.arg() / std::f64::consts::PI
}

#[derive(Serialize)]
struct JsonRow<'a> {
    model: Model,
    method: Method,
    m: Option<Box<RawValue>>,
    t: Option<Box<RawValue>>,
    x: Option<Box<RawValue>>,
    re: Option<Box<RawValue>>,
    im: Option<Box<RawValue>>,
    abs: Option<Box<RawValue>>,
    phase: Option<Box<RawValue>>,
    err_estimate: Option<Box<RawValue>>,
    flags: &'a str,
}

#[derive(Serialize)]
struct Document<'a, M: Serialize, R: Serialize> {
    meta: &'a M,
    rows: Vec<R>,
    #[serde(skip_serializing_if = "Option::is_none")]
    total_probability: Option<Box<RawValue>>,
}

fn write_json<M: Serialize, R: Serialize>(out: &mut dyn Write, doc: &Document<M, R>) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, doc).map_err(|e| Failure::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

fn cmd_propagator(args: PropagatorArgs) -> Result<(), Failure> {
    let run = resolve_propagator(args)?;
    let times = spread(run.t_grid.min, run.t_grid.max, run.t_grid.count, run.t_grid.spacing);
    let mut jobs = Vec::new();
    for &t in &times {
        let scale = match run.x_grid.mode {
            XMode::Absolute => 1.0,
            XMode::Relative => t,
        };
        for x in spread(run.x_grid.min, run.x_grid.max, run.x_grid.count, Spacing::Linear) {
            jobs.push((t, x * scale));
        }
    }
    let rows: Vec<Row> = jobs.par_iter().map(|&(t, x)| evaluate(&run, t, x)).collect::<Result<_, _>>()?;
    let unconverged = rows.iter().filter(|r| r.flags == "unconverged").count();
    if unconverged > 0 {
        eprintln!("warning: {unconverged} values did not reach the requested tolerance");
    }

    let mut out = open_output(&run.output)?;
    match run.format {
        Format::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in &rows {
                let mut line = format!("{},{},{},{},{}", run.model, run.method, num(run.m), num(r.t), num(r.x));
                match r.value {
                    Some(v) => {
                        let _ = write!(line, ",{},{},{},{}", num(v.re), num(v.im), num(v.norm()), num(phase_column(v)));
                    }
                    None => line.push_str(",,,,"),
                }
                let _ = write!(line, ",{},{}", r.err.map(num).unwrap_or_default(), r.flags);
                writeln!(out, "{line}")?;
            }
        }
        Format::Json => {
            let rows = rows
                .iter()
                .map(|r| JsonRow {
                    model: run.model,
                    method: run.method,
                    m: raw(run.m),
                    t: raw(r.t),
                    x: raw(r.x),
                    re: r.value.and_then(|v| raw(v.re)),
                    im: r.value.and_then(|v| raw(v.im)),
                    abs: r.value.and_then(|v| raw(v.norm())),
                    phase: r.value.and_then(|v| raw(phase_column(v))),
                    err_estimate: r.err.and_then(raw),
                    flags: r.flags,
                })
                .collect();
            write_json(&mut out, &Document { meta: &run, rows, total_probability: None })?;
        }
    }
    out.flush()?;
    Ok(())
}

// -------------------------------------------------------------- wavefunction

#[derive(Debug, Clone, Serialize)]
struct WaveRun {
    command: &'static str,
    delta: f64,
    t: f64,
    m: f64,
    grid: GridSpec,
    quadrature: QuadratureConfig,
    strict: bool,
    format: Format,
    #[serde(skip)]
    output: Option<PathBuf>,
}

fn resolve_wave(mut a: WaveArgs) -> Result<WaveRun, Failure> {
    let file: WaveArgs = read_config(&a.config)?;
    a.strict |= file.strict;
    overlay!(a, file; delta, t, m, x_min, x_max, n_points, abs_tol, rel_tol, max_subdivisions, output, format);
    let delta = a.delta.unwrap_or(1.0);
    let t = a.t.unwrap_or(1.0);
    let m = a.m.unwrap_or(1.0);
    if !(delta > 0.0 && delta.is_finite() && t >= 0.0 && t.is_finite() && m >= 0.0 && m.is_finite()) {
        return Err(usage("wavefunction needs delta > 0, t >= 0 and m >= 0"));
    }
    let d = default_grid(delta, t, m);
    let grid = GridSpec {
        x_min: a.x_min.unwrap_or(d.x_min),
        x_max: a.x_max.unwrap_or(d.x_max),
        n_points: a.n_points.unwrap_or(d.n_points),
    };
    Ok(WaveRun {
        command: "wavefunction",
        delta,
        t,
        m,
        grid,
        quadrature: quadrature(a.abs_tol, a.rel_tol, a.max_subdivisions)?,
        strict: a.strict,
        format: a.format.unwrap_or(Format::Csv),
        output: a.output,
    })
}

#[derive(Serialize)]
struct WaveRow {
    x: Option<Box<RawValue>>,
    re: Option<Box<RawValue>>,
    im: Option<Box<RawValue>>,
    abs2: Option<Box<RawValue>>,
}

fn core_failure(e: Error) -> Failure {
    match e {
        Error::Domain(_) | Error::Grid(_) => usage(e.to_string()),
        other => Failure::Numerical(other.to_string()),
    }
}

fn cmd_wavefunction(args: WaveArgs) -> Result<(), Failure> {
    let run = resolve_wave(args)?;
    let state = if run.strict {
        evolve(run.delta, run.t, run.m, &run.grid, &run.quadrature).map_err(core_failure)?
    } else {
        let (state, missed) =
            evolve_lenient(run.delta, run.t, run.m, &run.grid, &run.quadrature).map_err(core_failure)?;
        if missed > 0 {
            eprintln!("warning: {missed} grid values did not reach the requested tolerance");
        }
        state
    };
    let total = total_probability(&state);
    let mut out = open_output(&run.output)?;
    match run.format {
        Format::Csv => {
            writeln!(out, "x,re,im,abs2")?;
            for (x, a) in state.grid.iter().zip(&state.amplitudes) {
                writeln!(out, "{},{},{},{}", num(*x), num(a.re), num(a.im), num(a.norm_sqr()))?;
            }
            writeln!(out, "total_probability,{},,", num(total))?;
        }
        Format::Json => {
            let rows = state
                .grid
                .iter()
                .zip(&state.amplitudes)
                .map(|(x, a)| WaveRow { x: raw(*x), re: raw(a.re), im: raw(a.im), abs2: raw(a.norm_sqr()) })
                .collect();
            write_json(&mut out, &Document { meta: &run, rows, total_probability: raw(total) })?;
        }
    }
    out.flush()?;
    Ok(())
}

// ------------------------------------------------------------------- moments

#[derive(Debug, Clone, Serialize)]
struct MomentsRun {
    command: &'static str,
    t_min: f64,
    t_max: f64,
    points_per_decade: usize,
    m: f64,
    quadrature: QuadratureConfig,
    format: Format,
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct MomentRow {
    t: Option<Box<RawValue>>,
    peak: Option<Box<RawValue>>,
    moment: Option<Box<RawValue>>,
    peak_slope: Option<Box<RawValue>>,
    moment_slope: Option<Box<RawValue>>,
}

fn cmd_moments(mut a: MomentsArgs) -> Result<(), Failure> {
    let file: MomentsArgs = read_config(&a.config)?;
    overlay!(a, file; t_min, t_max, points_per_decade, m, abs_tol, rel_tol, max_subdivisions, output, format);
    let run = MomentsRun {
        command: "moments",
        t_min: a.t_min.unwrap_or(1e-3),
        t_max: a.t_max.unwrap_or(1e3),
        points_per_decade: a.points_per_decade.unwrap_or(4),
        m: a.m.unwrap_or(1.0),
        quadrature: quadrature(a.abs_tol, a.rel_tol, a.max_subdivisions)?,
        format: a.format.unwrap_or(Format::Csv),
        output: a.output,
    };
    let s = diffusion_scan(run.t_min, run.t_max, run.points_per_decade, run.m, &run.quadrature)
        .map_err(core_failure)?;
    let n = s.times.len();
    // slopes exist at interior points only
    let slope = |v: &[f64], i: usize| if i > 0 && i + 1 < n { Some(v[i - 1]) } else { None };
    let mut out = open_output(&run.output)?;
    match run.format {
        Format::Csv => {
            writeln!(out, "t,peak,moment,peak_slope,moment_slope")?;
            for i in 0..n {
                let ps = slope(&s.peak_slopes, i).map(num).unwrap_or_default();
                let ms = slope(&s.moment_slopes, i).map(num).unwrap_or_default();
                writeln!(out, "{},{},{},{ps},{ms}", num(s.times[i]), num(s.peak_values[i]), num(s.second_moments[i]))?;
            }
        }
        Format::Json => {
            let rows = (0..n)
                .map(|i| MomentRow {
                    t: raw(s.times[i]),
                    peak: raw(s.peak_values[i]),
                    moment: raw(s.second_moments[i]),
                    peak_slope: slope(&s.peak_slopes, i).and_then(raw),
                    moment_slope: slope(&s.moment_slopes, i).and_then(raw),
                })
                .collect();
            write_json(&mut out, &Document { meta: &run, rows, total_probability: None })?;
        }
    }
    out.flush()?;
    Ok(())
}

// ------------------------------------------------------------------ validate

fn cmd_validate(mut a: ValidateArgs) -> Result<(), Failure> {
    let file: ValidateArgs = read_config(&a.config)?;
    overlay!(a, file; suite, json, perturb, abs_tol, rel_tol, max_subdivisions);
    let suite = a.suite.unwrap_or(Suite::All);
    let perturb = a.perturb.unwrap_or(0.0);
    if !perturb.is_finite() {
        return Err(usage("--perturb must be finite"));
    }
    let opts = SuiteOptions {
        quadrature: quadrature(a.abs_tol, a.rel_tol, a.max_subdivisions)?,
        perturb,
        ..SuiteOptions::default()
    };
    let report = run_suite(suite, &opts).map_err(core_failure)?;
    let mut out = open_output(&a.json)?;
    serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Failure::Io(e.into()))?;
    writeln!(out)?;
    out.flush()?;
    let failed = report.failures().count();
    eprintln!(
        "suite {suite}: {} cases, {failed} failed, worst deviation {:e}",
        report.cases.len(),
        report.worst_deviation
    );
    for c in report.failures().take(10) {
        eprintln!("  FAIL {} {:?}: {:e} > {:e}", c.label, c.inputs, c.deviation, c.tolerance);
    }
    if failed > 0 {
        return Err(Failure::Validation);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Propagator(a) => cmd_propagator(a),
        Command::Wavefunction(a) => cmd_wavefunction(a),
        Command::Moments(a) => cmd_moments(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

//! `openness-cert`: rate tables, no-go certificates and closed-loop
//! simulations from the command line.
//!
//! [`run`] is the whole program minus process plumbing, so it can be driven
//! from tests with in-memory output streams.

// Negated float comparisons are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use openness_core::certify::{self, required_arguments};
use openness_core::rate::{DEFAULT_GRID_POINTS, DEFAULT_MAX_POINTS, DEFAULT_R_MAX, DEFAULT_R_MIN};
use openness_core::simulate::{integrate, linearize};
use openness_core::systems::{builtin, catalog, load_descriptor, ControlSystem, System};
use openness_core::{
    log_grid, openness_rate_table, powerlaw_fit, ClosedLoopField, Column, Error, GainClass,
    InverseGrowthBound, NormChoice, PowerLaw, Resolution, Verdict,
};

pub use config::RunConfig;

/// Exit code for invalid flags, configs, descriptors and specs.
pub const EXIT_CONFIG: i32 = 3;
/// Exit code when a grid or net would exceed its size limit.
pub const EXIT_RESOURCE: i32 = 4;
/// Exit code when a simulated trajectory diverges.
pub const EXIT_DIVERGED: i32 = 5;
/// Exit code for I/O failures on outputs and internal errors.
pub const EXIT_INTERNAL: i32 = 6;

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "OPENNESS_CERT_THREADS";

const CERTIFY_R_MIN: f64 = 1e-3;
const CERTIFY_R_MAX: f64 = 1e-1;
const CERTIFY_POINTS: usize = 12;
const TABLE_POINTS: usize = 32;
const TABLE_POINTS_PER_DECADE: f64 = 16.0;
const SIM_DT: f64 = 1e-3;
const SIM_T: f64 = 20.0;
const LINEARIZE_STEP: f64 = 1e-5;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    Output(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Output(_) => EXIT_INTERNAL,
            CliError::Core(e) => match e {
                Error::Resource(_) | Error::UnsupportedDimension { .. } => EXIT_RESOURCE,
                Error::Diverged { .. } => EXIT_DIVERGED,
                Error::Internal(_) => EXIT_INTERNAL,
                _ => EXIT_CONFIG,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Output(m) => f.write_str(m),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "openness-cert",
    version,
    about = "Openness-rate tables and no-go certificates for gain-limited feedback stabilization",
    long_about = "Openness-rate tables and no-go certificates for gain-limited feedback stabilization.\n\n\
        Worker threads default to the hardware parallelism and are capped by OPENNESS_CERT_THREADS.\n\
        Every default is echoed into the provenance of the output."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate the openness rate g(r) of a system at the origin and fit a power law.
    Rate(RateArgs),
    /// Test a necessary condition for stabilizability under a gain bound.
    #[command(long_about = "Test a necessary condition for stabilizability under a gain bound.\n\n\
        Exit codes: 0 obstruction certified, 1 no obstruction, 2 inconclusive, 3 configuration \
        error, 4 resource limit.\n\n\
        IMPORTANT: --h is a model of the closed-loop inverse growth that YOU assert for the \
        feedback class under test (lip:L for bi-Lipschitz loops, power:L:eta for bi-Holder ones). \
        It is not measured, and no universal bound on it exists: a certificate is only as good \
        as this assumption.")]
    Certify(CertifyArgs),
    /// Integrate a built-in closed loop with RK4 and optionally linearize it.
    Simulate(SimulateArgs),
    /// List the built-in systems and closed loops.
    Examples(ExamplesArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the main output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct SystemArgs {
    /// Built-in system (see `examples`).
    #[arg(long, conflicts_with = "descriptor")]
    system: Option<String>,
    /// Polynomial system descriptor (JSON).
    #[arg(long)]
    descriptor: Option<PathBuf>,
    /// Norm on both domain and image: linf or l2 [default: linf].
    #[arg(long)]
    norm: Option<String>,
}

#[derive(Args, Debug, Default)]
struct GridArgs {
    /// Smallest radius of the grid.
    #[arg(long)]
    r_min: Option<f64>,
    /// Largest radius of the grid.
    #[arg(long)]
    r_max: Option<f64>,
    /// Number of log-spaced radii.
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct ResolutionArgs {
    /// Net spacing as a fraction of the radius [default: finest within --max-points].
    #[arg(long)]
    delta: Option<f64>,
    /// Occupancy cell size as a fraction of the radius [default: the net covering radius].
    #[arg(long)]
    epsilon: Option<f64>,
    /// Point budget per ball net [default: 1000000].
    #[arg(long)]
    max_points: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct RateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    resolution: ResolutionArgs,
    /// Output format of the table [default: csv].
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    /// r <= g(rho(h(r))) on a rate table of the system.
    Main,
    /// Exponent calculus for power-law data (asymptotic certificate).
    Symbolic,
    /// g_Fu(h(r)) <= g_f(rho(h(r))) with the closed-loop rate of --loop.
    Strong,
    /// r <= sup |f| over the ball of radius rho(h(r)).
    Supnorm,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    system: SystemArgs,
    /// Checked radius range [defaults: 0.001 to 0.1, 12 points].
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    resolution: ResolutionArgs,
    /// Certification method [default: main].
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Gain bound |u(x)| <= d(|x|): pow:kappa:beta, const:c or table:s/d,...
    #[arg(long)]
    gain: Option<String>,
    /// Asserted inverse-growth model: lip:L, power:L:eta or table:r/h,...
    #[arg(long)]
    h: Option<String>,
    /// Rate envelope g(r) <= C r^gamma for --method symbolic: pow:C:gamma
    /// [default: fitted to a rate table of the system].
    #[arg(long)]
    g_envelope: Option<String>,
    /// Closed loop whose rate enters --method strong (see `examples`).
    #[arg(long = "loop")]
    loop_name: Option<String>,
    /// Largest number of radii per rate table built for the check, spaced at
    /// most 16 per decade [default: 32].
    #[arg(long)]
    table_points: Option<usize>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Closed loop: threshold_alpha or counterexample:<p>.
    #[arg(long = "loop")]
    loop_name: Option<String>,
    /// Initial state, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// RK4 step [default: 0.001].
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon [default: 20].
    #[arg(long)]
    t: Option<f64>,
    /// Print the Jacobian and eigenvalues at the origin.
    #[arg(long)]
    linearize: bool,
    /// Finite-difference step for --linearize [default: 1e-5].
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Args, Debug)]
struct ExamplesArgs {
    /// Listing format [default: text].
    #[arg(long)]
    json: bool,
}

/// Runs the program on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_CONFIG
                }
            };
        }
    };

    let pool = match thread_pool() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    // Output is buffered so the commands can run inside the worker pool.
    let (mut buf_out, mut buf_err) = (Vec::new(), Vec::new());
    let result = pool.install(|| {
        let (o, e): (&mut dyn Write, &mut dyn Write) = (&mut buf_out, &mut buf_err);
        match cli.command {
            Command::Rate(a) => cmd_rate(a, o, e),
            Command::Certify(a) => cmd_certify(a, o, e),
            Command::Simulate(a) => cmd_simulate(a, o, e),
            Command::Examples(a) => cmd_examples(a, o),
        }
    });
    let _ = out.write_all(&buf_out);
    let _ = err.write_all(&buf_err);
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}=`{v}` is not a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Output(format!("cannot start worker threads: {e}")))
}

fn load_config(common: &Common, command: &str) -> CliResult<RunConfig> {
    match &common.config {
        Some(p) => RunConfig::load(p, command),
        None => Ok(RunConfig::default()),
    }
}

fn resolve_system(args: &SystemArgs, cfg: &RunConfig) -> CliResult<Option<System>> {
    if args.system.is_some() || args.descriptor.is_some() {
        return Ok(Some(match (&args.system, &args.descriptor) {
            (Some(name), _) => builtin(name)?,
            (None, Some(path)) => System::from(load_descriptor(path)?),
            _ => unreachable!(),
        }));
    }
    match (&cfg.system, &cfg.descriptor) {
        (Some(_), Some(_)) => Err(CliError::Config(
            "config sets both `system` and `descriptor`".into(),
        )),
        (Some(name), None) => Ok(Some(builtin(name)?)),
        (None, Some(path)) => Ok(Some(System::from(load_descriptor(path)?))),
        (None, None) => Ok(None),
    }
}

fn require_system(args: &SystemArgs, cfg: &RunConfig) -> CliResult<System> {
    resolve_system(args, cfg)?
        .ok_or_else(|| CliError::Config("a system is required: pass --system or --descriptor".into()))
}

fn resolve_norm(args: &SystemArgs, cfg: &RunConfig) -> CliResult<NormChoice> {
    let s = args.norm.clone().or_else(|| cfg.norm.clone());
    match s {
        Some(s) => s.parse().map_err(CliError::from),
        None => Ok(NormChoice::EllInf),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
struct GridSpec {
    r_min: f64,
    r_max: f64,
    points: usize,
}

impl GridSpec {
    fn resolve(args: &GridArgs, cfg: &RunConfig, defaults: (f64, f64, usize)) -> CliResult<Self> {
        let g = GridSpec {
            r_min: config::pick(args.r_min, cfg.r_min, defaults.0),
            r_max: config::pick(args.r_max, cfg.r_max, defaults.1),
            points: config::pick(args.points, cfg.points, defaults.2),
        };
        if !(g.r_min > 0.0) || !g.r_max.is_finite() || !(g.r_min < g.r_max) {
            return Err(CliError::Config(format!(
                "radius range needs 0 < r_min < r_max, got [{}, {}]",
                g.r_min, g.r_max
            )));
        }
        if g.points < 2 {
            return Err(CliError::Config(format!("need at least 2 grid points, got {}", g.points)));
        }
        Ok(g)
    }

    fn radii(&self) -> CliResult<Vec<f64>> {
        Ok(log_grid(self.r_min, self.r_max, self.points)?)
    }
}

fn resolve_resolution(args: &ResolutionArgs, cfg: &RunConfig) -> CliResult<Resolution> {
    let res = Resolution {
        spacing: args.delta.or(cfg.delta),
        cell: args.epsilon.or(cfg.epsilon),
        max_points: config::pick(args.max_points, cfg.max_points, DEFAULT_MAX_POINTS),
    };
    for (name, v) in [("delta", res.spacing), ("epsilon", res.cell)] {
        if let Some(v) = v {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
    }
    if res.max_points == 0 {
        return Err(CliError::Config("max-points must be positive".into()));
    }
    Ok(res)
}

fn resolution_json(res: &Resolution) -> serde_json::Value {
    json!({
        "delta": res.spacing.map_or(json!("auto"), |v| json!(v)),
        "epsilon": res.cell.map_or(json!("auto"), |v| json!(v)),
        "max_points": res.max_points,
    })
}

fn provenance(command: &str) -> serde_json::Value {
    json!({
        "tool": "openness-cert",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
    })
}

fn emit(main: &str, path: Option<&Path>, out: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, main)
            .map_err(|e| CliError::Output(format!("cannot write {}: {e}", p.display()))),
        None => out
            .write_all(main.as_bytes())
            .map_err(|e| CliError::Output(format!("cannot write output: {e}"))),
    }
}

/// Summary lines go to stdout when the main output went to a file and to
/// stderr otherwise, so stdout stays machine-readable.
fn summary<'a>(path: Option<&Path>, out: &'a mut dyn Write, err: &'a mut dyn Write) -> &'a mut dyn Write {
    if path.is_some() {
        out
    } else {
        err
    }
}

fn cmd_rate(a: RateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let cfg = load_config(&a.common, "rate")?;
    let sys = require_system(&a.system, &cfg)?;
    let norm = resolve_norm(&a.system, &cfg)?;
    let grid = GridSpec::resolve(&a.grid, &cfg, (DEFAULT_R_MIN, DEFAULT_R_MAX, DEFAULT_GRID_POINTS))?;
    let res = resolve_resolution(&a.resolution, &cfg)?;
    let format = match (a.format, cfg.format.as_deref()) {
        (Some(f), _) => f,
        (None, None) | (None, Some("csv")) => Format::Csv,
        (None, Some("json")) => Format::Json,
        (None, Some(other)) => return Err(CliError::Config(format!("unknown format `{other}`"))),
    };
    let out_path = a.common.out.clone().or(cfg.out.clone());

    let table = openness_rate_table(&sys, &grid.radii()?, norm, res)?;
    let fit = powerlaw_fit(&table, Column::Upper);
    let zero = table.consistent_with_zero();

    let mut lines = vec![format!(
        "rate: {} norm={} r in [{}, {}] ({} log-spaced points), delta={}, epsilon={}, max_points={}",
        table.system,
        norm,
        grid.r_min,
        grid.r_max,
        grid.points,
        res.spacing.map_or("auto".to_string(), |v| format!("{v}r")),
        res.cell.map_or("auto".to_string(), |v| format!("{v}r")),
        res.max_points
    )];
    match &fit {
        Ok(f) => lines.push(format!(
            "fit (upper column): C = {:.6}, gamma = {:.6}, max relative residual {:.3e}",
            f.law.coefficient, f.law.exponent, f.max_relative_residual
        )),
        Err(e) => lines.push(format!("fit unavailable: {e}")),
    }
    if zero {
        lines.push(
            "rate consistent with zero: every g_upper is within twice its discretization slack".into(),
        );
    }
    if let Some(r0) = table.zero_rate_below {
        lines.push(format!("analytic: the rate vanishes identically below radius {r0:.6}"));
    }

    let body = match format {
        Format::Csv => table.to_csv(),
        Format::Json => {
            let v = json!({
                "provenance": {
                    "run": provenance("rate"),
                    "system": table.system,
                    "norm": norm.as_str(),
                    "grid": grid,
                    "resolution": resolution_json(&res),
                },
                "table": table,
                "fit": fit.as_ref().ok(),
                "consistent_with_zero": zero,
            });
            serde_json::to_string_pretty(&v).expect("json") + "\n"
        }
    };
    emit(&body, out_path.as_deref(), out)?;
    let s = summary(out_path.as_deref(), out, err);
    for l in lines {
        let _ = writeln!(s, "{l}");
    }
    Ok(0)
}

fn parse_gain(flag: &Option<String>, cfg: &RunConfig) -> CliResult<GainClass> {
    let s = flag
        .clone()
        .or_else(|| cfg.gain.clone())
        .ok_or_else(|| CliError::Config("--gain is required (e.g. pow:1:1 or const:10)".into()))?;
    Ok(s.parse()?)
}

fn parse_h(flag: &Option<String>, cfg: &RunConfig) -> CliResult<InverseGrowthBound> {
    let s = flag
        .clone()
        .or_else(|| cfg.h.clone())
        .ok_or_else(|| CliError::Config("--h is required (e.g. lip:1 or power:1:0.5)".into()))?;
    Ok(s.parse()?)
}

/// Log grid spanning `[lo, hi]` with at most [`TABLE_POINTS_PER_DECADE`]
/// radii per decade and at most `max_points` in total.
fn span_grid(lo: f64, hi: f64, max_points: usize) -> CliResult<Vec<f64>> {
    if !(lo > 0.0) || !hi.is_finite() {
        return Err(CliError::Config(format!(
            "cannot tabulate the rate on [{lo}, {hi}]; the gain and h models must be positive"
        )));
    }
    if hi <= lo * (1.0 + 1e-12) {
        return Ok(vec![hi]);
    }
    let by_density = (TABLE_POINTS_PER_DECADE * (hi / lo).log10()).ceil() as usize + 1;
    Ok(log_grid(lo, hi, by_density.clamp(2, max_points))?)
}

#[derive(Serialize)]
struct CertifyOutput<'a> {
    #[serde(flatten)]
    verdict: &'a Verdict,
    provenance: serde_json::Value,
}

fn cmd_certify(a: CertifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let cfg = load_config(&a.common, "certify")?;
    let method = match (a.method, cfg.method.as_deref()) {
        (Some(m), _) => m,
        (None, None) => Method::Main,
        (None, Some(m)) => Method::from_str(m, true)
            .map_err(|_| CliError::Config(format!("unknown method `{m}`")))?,
    };
    let norm = resolve_norm(&a.system, &cfg)?;
    let grid = GridSpec::resolve(&a.grid, &cfg, (CERTIFY_R_MIN, CERTIFY_R_MAX, CERTIFY_POINTS))?;
    let res = resolve_resolution(&a.resolution, &cfg)?;
    let table_points = config::pick(a.table_points, cfg.table_points, TABLE_POINTS);
    if table_points < 2 {
        return Err(CliError::Config("table-points must be at least 2".into()));
    }
    let d = parse_gain(&a.gain, &cfg)?;
    let h = parse_h(&a.h, &cfg)?;
    let out_path = a.common.out.clone().or(cfg.out.clone());
    let radii = grid.radii()?;
    let sys = resolve_system(&a.system, &cfg)?;

    let mut prov = json!({
        "run": provenance("certify"),
        "method": method,
        "system": sys.as_ref().map(|s| s.id()),
        "norm": norm.as_str(),
        "gain": d.to_string(),
        "h": h.to_string(),
        "h_model": "asserted by the user for the feedback class under test; not measured",
        "grid": grid,
        "table_points": table_points,
        "resolution": resolution_json(&res),
    });

    let verdict = match method {
        Method::Main => {
            let sys = require_system(&a.system, &cfg)?;
            let (lo, hi) = required_arguments(&d, &h, &radii)?;
            let table = openness_rate_table(&sys, &span_grid(lo, hi, table_points)?, norm, res)?;
            prov["table_range"] = json!([table.r_min(), table.r_max()]);
            certify::check_nogo(&table, &d, &h, &radii)?
        }
        Method::Strong => {
            let sys = require_system(&a.system, &cfg)?;
            let name = a
                .loop_name
                .clone()
                .or_else(|| cfg.loop_name.clone())
                .ok_or_else(|| CliError::Config("--method strong needs --loop".into()))?;
            let field: ClosedLoopField = name.parse()?;
            let closed = field.closed_loop_map();
            let (lo, hi) = required_arguments(&d, &h, &radii)?;
            let g_f = openness_rate_table(&sys, &span_grid(lo, hi, table_points)?, norm, res)?;
            let hs = radii
                .iter()
                .map(|&r| h.eval(r).ok_or_else(|| CliError::Config(format!("h does not reach r = {r}"))))
                .collect::<CliResult<Vec<_>>>()?;
            let (hlo, hhi) = hs.iter().fold((f64::INFINITY, 0.0f64), |(l, u), &v| (l.min(v), u.max(v)));
            let g_fu = openness_rate_table(&closed, &span_grid(hlo, hhi, table_points)?, norm, res)?;
            prov["loop"] = json!(field.to_string());
            prov["table_range"] = json!([g_f.r_min(), g_f.r_max()]);
            prov["closed_loop_table_range"] = json!([g_fu.r_min(), g_fu.r_max()]);
            certify::check_nogo_strong(&g_f, &g_fu, &d, &h, &radii)?
        }
        Method::Supnorm => {
            let sys = require_system(&a.system, &cfg)?;
            certify::check_norm_bound_nogo(&sys, &d, &h, &radii, norm, res)?
        }
        Method::Symbolic => {
            let env_spec = a.g_envelope.clone().or_else(|| cfg.g_envelope.clone());
            let envelope: PowerLaw = match (env_spec, &sys) {
                (Some(s), _) => s.parse()?,
                (None, Some(sys)) => {
                    let table = openness_rate_table(
                        sys,
                        &log_grid(grid.r_min, grid.r_max, table_points.max(4))?,
                        norm,
                        res,
                    )?;
                    let fit = powerlaw_fit(&table, Column::Upper)?;
                    prov["envelope_fit"] = json!(fit);
                    fit.law
                }
                (None, None) => {
                    return Err(CliError::Config(
                        "--method symbolic needs --g-envelope or a system to fit one from".into(),
                    ))
                }
            };
            prov["envelope"] = json!(envelope.to_string());
            certify::check_nogo_symbolic(envelope, &d, &h)?
        }
    };

    let body = serde_json::to_string_pretty(&CertifyOutput {
        verdict: &verdict,
        provenance: prov,
    })
    .expect("json")
        + "\n";
    emit(&body, out_path.as_deref(), out)?;
    let _ = writeln!(err, "{:?} (exit {})", verdict.outcome, verdict.exit_code());
    Ok(verdict.exit_code())
}

fn parse_point(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Config(format!("`{v}` in --x0 is not a finite number")))
        })
        .collect()
}

fn fmt_complex(z: &num_complex::Complex64) -> String {
    if z.im == 0.0 {
        format!("{:.6}", z.re)
    } else {
        format!("{:.6}{:+.6}i", z.re, z.im)
    }
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let cfg = load_config(&a.common, "simulate")?;
    let name = a
        .loop_name
        .clone()
        .or_else(|| cfg.loop_name.clone())
        .ok_or_else(|| CliError::Config("--loop is required (see `examples`)".into()))?;
    let field: ClosedLoopField = name.parse()?;
    let x0 = match (&a.x0, &cfg.x0) {
        (Some(s), _) => parse_point(s)?,
        (None, Some(v)) => v.clone(),
        (None, None) => return Err(CliError::Config("--x0 is required".into())),
    };
    let dt = config::pick(a.dt, cfg.dt, SIM_DT);
    let t_end = config::pick(a.t, cfg.t, SIM_T);
    let lin = a.linearize || cfg.linearize.unwrap_or(false);
    let step = config::pick(a.step, cfg.step, LINEARIZE_STEP);
    let out_path = a.common.out.clone().or(cfg.out.clone());

    let mut lines = vec![format!(
        "simulate: {field} from {x0:?}, dt={dt}, T={t_end} (classical RK4)"
    )];
    if lin {
        let origin = vec![0.0; field.dim()];
        let l = linearize(&field, &origin, step)?;
        lines.push(format!("linearization at 0 (step {step}): J = {:?}", l.jacobian));
        lines.push(format!(
            "eigenvalues: {}",
            l.eigenvalues.iter().map(fmt_complex).collect::<Vec<_>>().join(", ")
        ));
    }
    let traj = match integrate(&field, &x0, dt, t_end) {
        Ok(t) => t,
        Err(Error::Diverged { time, norm, partial }) => {
            emit(&partial.to_csv(), out_path.as_deref(), out)?;
            let s = summary(out_path.as_deref(), out, err);
            for l in lines {
                let _ = writeln!(s, "{l}");
            }
            let _ = writeln!(err, "error: trajectory diverged at t = {time} (|x| = {norm:e}); partial trajectory written");
            return Ok(EXIT_DIVERGED);
        }
        Err(e) => return Err(e.into()),
    };
    lines.push(format!(
        "final |x| = {:.6e} at t = {}; monotone decay: {}",
        traj.final_norm(),
        traj.times.last().copied().unwrap_or(0.0),
        if traj.is_monotone_decreasing() { "yes" } else { "no" }
    ));
    lines.push(match traj.decay_fit {
        Some(rate) => format!("decay rate (final half): {rate:.6}"),
        None => "decay rate: not fitted (trajectory reaches zero)".into(),
    });
    emit(&traj.to_csv(), out_path.as_deref(), out)?;
    let s = summary(out_path.as_deref(), out, err);
    for l in lines {
        let _ = writeln!(s, "{l}");
    }
    Ok(0)
}

const LOOPS: [(&str, &str); 2] = [
    (
        "threshold_alpha",
        "cubic2d under u = cbrt(-2 x2 - x1/2 - x1 x2 - x2^2); linearization [[0,1],[-1/2,-2]], eigenvalues -1 +- sqrt(1/2)",
    ),
    (
        "counterexample:<p>",
        "x' = x + u_p(x) with u_p = -x - x^p, odd p >= 3; closed loop x' = -x^p, inverse growth r^(1/p)",
    ),
];

fn cmd_examples(a: ExamplesArgs, out: &mut dyn Write) -> CliResult<i32> {
    let entries = catalog();
    let text = if a.json {
        let v = json!({
            "systems": entries.iter().map(|e| json!({"name": e.name, "dims": e.dims, "summary": e.summary})).collect::<Vec<_>>(),
            "loops": LOOPS.iter().map(|(n, s)| json!({"name": n, "summary": s})).collect::<Vec<_>>(),
        });
        serde_json::to_string_pretty(&v).expect("json") + "\n"
    } else {
        let mut s = String::from("systems:\n");
        for e in &entries {
            s += &format!("  {:<18} {:<10} {}\n", e.name, e.dims, e.summary);
        }
        s += "closed loops (simulate --loop, certify --loop):\n";
        for (n, d) in LOOPS {
            s += &format!("  {n:<18} {d}\n");
        }
        s
    };
    emit(&text, None, out)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["openness-cert"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn examples_listing() {
        let (code, out, _) = run_str(&["examples"]);
        assert_eq!(code, 0);
        for name in ["unicycle", "cubic_scalar", "counterexample_p", "threshold_alpha"] {
            assert!(out.contains(name), "{name}");
        }
    }

    #[test]
    fn bad_flags_are_config_errors() {
        assert_eq!(run_str(&["rate"]).0, EXIT_CONFIG);
        assert_eq!(run_str(&["rate", "--system", "nope"]).0, EXIT_CONFIG);
        assert_eq!(run_str(&["rate", "--bogus"]).0, EXIT_CONFIG);
        assert_eq!(
            run_str(&["rate", "--system", "cubic_scalar", "--r-min", "1", "--r-max", "0.5"]).0,
            EXIT_CONFIG
        );
        assert_eq!(run_str(&["certify", "--system", "cubic_scalar", "--gain", "pow:1"]).0, EXIT_CONFIG);
        assert_eq!(run_str(&["simulate", "--loop", "threshold_alpha", "--x0", "1,x"]).0, EXIT_CONFIG);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_str(&["certify", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("not measured"));
    }

    #[test]
    fn point_parsing() {
        assert_eq!(parse_point("0.05,-0.05").unwrap(), vec![0.05, -0.05]);
        assert!(parse_point("0.05,,1").is_err());
        assert!(parse_point("nan").is_err());
    }
}

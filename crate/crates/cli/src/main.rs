//! `param-atlas`: command-line front end.
//!
//! Every run first writes `<out>.manifest.json` with the fully resolved
//! parameters; `replay` re-runs a manifest. Exit codes: 0 success,
//! 2 invalid input, 3 numeric failure, 1 I/O trouble.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use param_atlas::exponential::RayOptions;
use param_atlas::hyperbolic::{GammaOptions, Side};
use param_atlas::quadratic::ExternalAngle;
use param_atlas::render::{PaletteSpec, Window};
use param_atlas::separation::{LineOptions, SegmentSpec};
use param_atlas::{ClassifyOptions, Error, ExternalAddress, Family};

use config::*;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } | Error::Csv(_) => CliError::Io(e.to_string()),
            e if e.is_numeric() => CliError::Numeric(e.to_string()),
            e => CliError::Usage(e.to_string()),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) | CliError::Io(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(name = "param-atlas", version, about = "Parameter spaces of unicritical and exponential families")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "PARAM_ATLAS_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a window of parameters and write a PPM image and a grid CSV.
    Render(RenderArgs),
    /// Trace a parameter ray to a polyline CSV.
    Trace(TraceArgs),
    /// Attracting-curve points (single t) or curves (t schedule) near an exponential ray.
    Gamma(GammaArgs),
    /// Landing probe of an exponential ray, or a fiber probe against saved separation lines.
    Probe(ProbeArgs),
    /// Build a separation line from a JSON segment list and answer separation queries.
    Separate(SeparateArgs),
    /// Re-run a manifest written by an earlier run.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct RenderArgs {
    /// quadratic, exp, exponential or unicritical-<d>
    #[arg(long, default_value = "quadratic")]
    family: String,
    /// re_min,re_max,im_min,im_max
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// Image width in pixels.
    #[arg(long, default_value_t = 400)]
    size: usize,
    /// Image height (default: square pixels).
    #[arg(long)]
    height: Option<usize>,
    /// Gray bands by escape time.
    #[arg(long)]
    bands: Option<u32>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    p_max: Option<usize>,
    /// Output prefix.
    #[arg(long, default_value = "render")]
    out: PathBuf,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long, default_value = "quadratic")]
    family: String,
    /// External angle p/q (unicritical families).
    #[arg(long)]
    angle: Option<String>,
    /// External address (exponential family).
    #[arg(long, allow_hyphen_values = true)]
    address: Option<String>,
    /// Potentials start:stop:steps (unicritical families).
    #[arg(long, default_value = "8:1e-4:100")]
    potential: String,
    /// Ray parameters start:stop:steps (exponential family).
    #[arg(long, default_value = "5:0.5:32")]
    t: String,
    #[arg(long, default_value_t = RayOptions::default().tol)]
    tol: f64,
    #[arg(long, default_value = "trace")]
    out: PathBuf,
}

#[derive(Args)]
struct GammaArgs {
    #[arg(long, allow_hyphen_values = true)]
    address: String,
    /// A single t, or start:stop:steps for curves.
    #[arg(long)]
    t: String,
    /// Period range n_min:n_max.
    #[arg(long)]
    n: String,
    /// above, below or both
    #[arg(long, default_value = "both")]
    sign: String,
    #[arg(long, default_value = "gamma")]
    out: PathBuf,
}

#[derive(Args)]
struct ProbeArgs {
    /// Landing probe for this exponential address.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["base", "candidates", "line"])]
    address: Option<String>,
    #[arg(long, default_value = "5:0.001:80")]
    t: String,
    #[arg(long, default_value = "exp")]
    family: String,
    /// Fiber probe base point re,im.
    #[arg(long, allow_hyphen_values = true)]
    base: Option<String>,
    /// Candidates re,im;re,im;...
    #[arg(long, allow_hyphen_values = true)]
    candidates: Option<String>,
    /// Prefix of a saved separation line (repeatable).
    #[arg(long)]
    line: Vec<PathBuf>,
    #[arg(long, default_value = "probe")]
    out: PathBuf,
}

#[derive(Args)]
struct SeparateArgs {
    /// JSON file holding a list of segment specs.
    #[arg(long)]
    spec: PathBuf,
    /// Query pair a_re,a_im;b_re,b_im (repeatable).
    #[arg(long, allow_hyphen_values = true)]
    query: Vec<String>,
    #[arg(long, default_value_t = param_atlas::separation::DEFAULT_JOIN_TOL)]
    join_tol: f64,
    #[arg(long, default_value = "separate")]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    manifest: PathBuf,
    /// Write outputs under this prefix instead of the recorded one.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_family(s: &str) -> Result<Family, CliError> {
    let s = if s == "exp" { "exponential" } else { s };
    Ok(s.parse::<Family>()?)
}

fn parse_f64(s: &str, what: &str) -> Result<f64, CliError> {
    s.trim().parse::<f64>().map_err(|_| usage(format!("{what}: `{s}` is not a number")))
}

fn parse_schedule(s: &str, what: &str) -> Result<Schedule, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(Schedule { start: parse_f64(v, what)?, stop: parse_f64(v, what)?, steps: 1 }),
        [a, b, n] => {
            let steps = n.trim().parse::<usize>().map_err(|_| usage(format!("{what}: `{n}` is not a step count")))?;
            let s = Schedule { start: parse_f64(a, what)?, stop: parse_f64(b, what)?, steps };
            s.values().map_err(|e| usage(format!("{what}: {e}")))?;
            Ok(s)
        }
        _ => Err(usage(format!("{what}: expected start:stop:steps, got `{s}`"))),
    }
}

fn parse_complex(s: &str, what: &str) -> Result<Complex64, CliError> {
    match s.split(',').collect::<Vec<_>>().as_slice() {
        [re, im] => Ok(Complex64::new(parse_f64(re, what)?, parse_f64(im, what)?)),
        _ => Err(usage(format!("{what}: expected re,im, got `{s}`"))),
    }
}

fn parse_address(s: &str) -> Result<ExternalAddress, CliError> {
    s.parse::<ExternalAddress>().map_err(|e| usage(format!("address `{s}`: {e}")))
}

fn resolve_render(a: RenderArgs) -> Result<RunConfig, CliError> {
    let family = parse_family(&a.family)?;
    let window = match (a.window, a.height) {
        (None, None) if family.is_exponential() => Window::exponential_default(a.size)?,
        (None, None) => Window::quadratic_default(a.size)?,
        (w, h) => {
            let w = w.unwrap_or_else(|| {
                if family.is_exponential() { "-6,4,-15,15" } else { "-2.25,0.75,-1.5,1.5" }.to_string()
            });
            let v = w.split(',').map(|x| parse_f64(x, "--window")).collect::<Result<Vec<_>, _>>()?;
            let [r0, r1, i0, i1] = v[..] else {
                return Err(usage(format!("--window: expected re_min,re_max,im_min,im_max, got `{w}`")));
            };
            match h {
                Some(h) => Window::new(r0, r1, i0, i1, a.size, h)?,
                None => Window::with_width(r0, r1, i0, i1, a.size)?,
            }
        }
    };
    let mut classify = ClassifyOptions::default();
    if let Some(n) = a.n_max {
        classify.n_max = n;
        classify.burn_in = classify.burn_in.min(n / 2);
    }
    if let Some(p) = a.p_max {
        classify.p_max = p;
    }
    Ok(RunConfig::Render(RenderConfig {
        family,
        window,
        palette: PaletteSpec { escape_bands: a.bands },
        classify,
        out: a.out,
    }))
}

fn resolve_trace(a: TraceArgs) -> Result<RunConfig, CliError> {
    let family = parse_family(&a.family)?;
    let ray = RayOptions { tol: a.tol, ..RayOptions::default() };
    let (target, schedule) = if family.is_exponential() {
        let address = a.address.ok_or_else(|| usage("--address is required for the exponential family"))?;
        (TraceTarget::Address { address: parse_address(&address)? }, parse_schedule(&a.t, "--t")?)
    } else {
        let angle = a.angle.ok_or_else(|| usage("--angle is required for unicritical families"))?;
        let angle = angle.parse::<ExternalAngle>().map_err(|e| usage(format!("angle `{angle}`: {e}")))?;
        (TraceTarget::Angle { angle }, parse_schedule(&a.potential, "--potential")?)
    };
    Ok(RunConfig::Trace(TraceConfig { family, target, schedule, ray, out: a.out }))
}

fn resolve_gamma(a: GammaArgs) -> Result<RunConfig, CliError> {
    let (n_min, n_max) = match a.n.split(':').collect::<Vec<_>>().as_slice() {
        [x] => {
            let n = x.trim().parse::<usize>().map_err(|_| usage(format!("--n: `{x}` is not a period")))?;
            (n, n)
        }
        [x, y] => {
            let p = |s: &str| s.trim().parse::<usize>().map_err(|_| usage(format!("--n: `{s}` is not a period")));
            (p(x)?, p(y)?)
        }
        _ => return Err(usage(format!("--n: expected n_min:n_max, got `{}`", a.n))),
    };
    if n_min > n_max {
        return Err(usage(format!("--n: empty range {n_min}:{n_max}")));
    }
    let sides = match a.sign.as_str() {
        "both" => vec![Side::Above, Side::Below],
        s => vec![s.parse::<Side>().map_err(|e| usage(format!("--sign: {e}")))?],
    };
    Ok(RunConfig::Gamma(GammaConfig {
        address: parse_address(&a.address)?,
        t: parse_schedule(&a.t, "--t")?,
        n_min,
        n_max,
        sides,
        options: GammaOptions::default(),
        out: a.out,
    }))
}

fn resolve_probe(a: ProbeArgs) -> Result<RunConfig, CliError> {
    if let Some(address) = a.address {
        return Ok(RunConfig::Probe(ProbeConfig::Landing {
            address: parse_address(&address)?,
            t: parse_schedule(&a.t, "--t")?,
            ray: RayOptions::default(),
            out: a.out,
        }));
    }
    let base = a.base.ok_or_else(|| usage("either --address or --base is required"))?;
    let candidates = a
        .candidates
        .unwrap_or_default()
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_complex(s, "--candidates"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RunConfig::Probe(ProbeConfig::Fiber {
        family: parse_family(&a.family)?,
        base: parse_complex(&base, "--base")?,
        candidates,
        lines: a.line,
        out: a.out,
    }))
}

fn resolve_separate(a: SeparateArgs) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&a.spec).map_err(|e| CliError::Io(format!("{}: {e}", a.spec.display())))?;
    let segments: Vec<SegmentSpec> =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", a.spec.display())))?;
    let queries = a
        .query
        .iter()
        .map(|q| match q.split(';').collect::<Vec<_>>().as_slice() {
            [x, y] => Ok([parse_complex(x, "--query")?, parse_complex(y, "--query")?]),
            _ => Err(usage(format!("--query: expected a_re,a_im;b_re,b_im, got `{q}`"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if !(a.join_tol > 0.0) {
        return Err(usage("--join-tol must be positive"));
    }
    Ok(RunConfig::Separate(SeparateConfig {
        segments,
        options: LineOptions { join_tol: a.join_tol, ..LineOptions::default() },
        queries,
        out: a.out,
    }))
}

fn resolve_replay(a: ReplayArgs) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&a.manifest).map_err(|e| CliError::Io(format!("{}: {e}", a.manifest.display())))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", a.manifest.display())))?;
    let mut run = manifest.run;
    if let Some(out) = a.out {
        run.set_out(out);
    }
    Ok(run)
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| usage(format!("--jobs: {e}")))?;
    }
    let config = match cli.command {
        Command::Render(a) => resolve_render(a)?,
        Command::Trace(a) => resolve_trace(a)?,
        Command::Gamma(a) => resolve_gamma(a)?,
        Command::Probe(a) => resolve_probe(a)?,
        Command::Separate(a) => resolve_separate(a)?,
        Command::Replay(a) => resolve_replay(a)?,
    };
    config.execute()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

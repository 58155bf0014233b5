use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use param_atlas::exponential::{geometric_grid, landing_probe, trace_ray_e_at, RayOptions};
use param_atlas::hyperbolic::{gamma_curve, gamma_point, ray_tangent, GammaOptions, GammaPoint, Side};
use param_atlas::quadratic::{trace_ray_q, ExternalAngle, SEED_POTENTIAL};
use param_atlas::render::{classify_grid, write_image, PaletteSpec, Window};
use param_atlas::separation::{build_separation_line, fiber_probe, LineOptions, SegmentSpec, SeparationLine};
use param_atlas::{ClassifyOptions, Error, ExternalAddress, Family};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// `start:stop:steps`, geometric between positive ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Schedule {
    pub fn values(&self) -> Result<Vec<f64>, Error> {
        if self.steps == 1 {
            return Ok(vec![self.start]);
        }
        geometric_grid(self.start, self.stop, self.steps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub family: Family,
    pub window: Window,
    pub palette: PaletteSpec,
    pub classify: ClassifyOptions,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum TraceTarget {
    Angle { angle: ExternalAngle },
    Address { address: ExternalAddress },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub family: Family,
    #[serde(flatten)]
    pub target: TraceTarget,
    pub schedule: Schedule,
    pub ray: RayOptions,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaConfig {
    pub address: ExternalAddress,
    pub t: Schedule,
    pub n_min: usize,
    pub n_max: usize,
    pub sides: Vec<Side>,
    pub options: GammaOptions,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "probe", rename_all = "snake_case")]
pub enum ProbeConfig {
    Landing {
        address: ExternalAddress,
        t: Schedule,
        ray: RayOptions,
        out: PathBuf,
    },
    Fiber {
        family: Family,
        base: Complex64,
        candidates: Vec<Complex64>,
        lines: Vec<PathBuf>,
        out: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparateConfig {
    pub segments: Vec<SegmentSpec>,
    pub options: LineOptions,
    pub queries: Vec<[Complex64; 2]>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Render(RenderConfig),
    Trace(TraceConfig),
    Gamma(GammaConfig),
    Probe(ProbeConfig),
    Separate(SeparateConfig),
}

#[derive(Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub run: RunConfig,
}

/// `prefix` with `suffix` appended to the file name.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn csv_io(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

impl RunConfig {
    pub fn out(&self) -> &Path {
        match self {
            RunConfig::Render(c) => &c.out,
            RunConfig::Trace(c) => &c.out,
            RunConfig::Gamma(c) => &c.out,
            RunConfig::Probe(ProbeConfig::Landing { out, .. } | ProbeConfig::Fiber { out, .. }) => out,
            RunConfig::Separate(c) => &c.out,
        }
    }

    pub fn set_out(&mut self, prefix: PathBuf) {
        match self {
            RunConfig::Render(c) => c.out = prefix,
            RunConfig::Trace(c) => c.out = prefix,
            RunConfig::Gamma(c) => c.out = prefix,
            RunConfig::Probe(ProbeConfig::Landing { out, .. } | ProbeConfig::Fiber { out, .. }) => *out = prefix,
            RunConfig::Separate(c) => c.out = prefix,
        }
    }

    /// Writes the manifest, then the outputs. Returns the written paths.
    pub fn execute(&self) -> Result<Vec<PathBuf>, CliError> {
        let manifest_path = with_suffix(self.out(), ".manifest.json");
        write_json(
            &manifest_path,
            &Manifest {
                tool: "param-atlas".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                run: self.clone(),
            },
        )?;
        let mut written = vec![manifest_path];
        match self {
            RunConfig::Render(c) => run_render(c, &mut written)?,
            RunConfig::Trace(c) => run_trace(c, &mut written)?,
            RunConfig::Gamma(c) => run_gamma(c, &mut written)?,
            RunConfig::Probe(c) => run_probe(c, &mut written)?,
            RunConfig::Separate(c) => run_separate(c, &mut written)?,
        }
        Ok(written)
    }
}

fn run_render(c: &RenderConfig, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let grid = classify_grid(c.family, &c.window, &c.classify);
    let ppm = with_suffix(&c.out, ".ppm");
    write_image(&grid, &c.palette, &ppm)?;
    let csv = with_suffix(&c.out, ".csv");
    grid.save_csv(&csv)?;
    written.extend([ppm, csv]);
    Ok(())
}

fn run_trace(c: &TraceConfig, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let values = c.schedule.values()?;
    let line = match &c.target {
        TraceTarget::Angle { angle } => trace_ray_q(c.family, *angle, &values, SEED_POTENTIAL)?,
        TraceTarget::Address { address } => trace_ray_e_at(address, &values, &c.ray)?,
    };
    let path = with_suffix(&c.out, ".csv");
    line.save(&path)?;
    written.push(path);
    if line.len() < values.len() {
        return Err(CliError::Numeric(format!(
            "trace stopped after {} of {} points",
            line.len(),
            values.len()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct GammaRow {
    n: usize,
    side: Side,
    t: f64,
    re: Option<f64>,
    im: Option<f64>,
    residual: Option<f64>,
    multiplier_abs: Option<f64>,
    status: String,
}

#[derive(Serialize)]
struct SqueezeRow {
    n: usize,
    side: Side,
    d: f64,
    normal_offset: f64,
}

fn run_gamma(c: &GammaConfig, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    if c.n_min > c.n_max {
        return Err(CliError::Usage(format!("empty period range {}:{}", c.n_min, c.n_max)));
    }
    let ns: Vec<usize> = (c.n_min..=c.n_max).collect();
    let mut failures = Vec::new();
    if c.t.steps == 1 {
        let t = c.t.start;
        let base = param_atlas::exponential::ray_point(&c.address, t, &c.options.ray, None)?;
        let tangent = ray_tangent(&c.address, t, base.c, &c.options.ray)?;
        let jobs: Vec<(usize, Side)> = ns.iter().flat_map(|&n| c.sides.iter().map(move |&s| (n, s))).collect();
        use rayon::prelude::*;
        let results: Vec<Result<GammaPoint, Error>> =
            jobs.par_iter().map(|&(n, s)| gamma_point(&c.address, t, n, s, &c.options)).collect();

        let points_path = with_suffix(&c.out, ".gamma.csv");
        let mut points = csv_writer(&points_path)?;
        let squeeze_path = with_suffix(&c.out, ".squeeze.csv");
        let mut squeeze = csv_writer(&squeeze_path)?;
        for (&(n, side), r) in jobs.iter().zip(&results) {
            let row = match r {
                Ok(g) => {
                    squeeze
                        .serialize(SqueezeRow {
                            n,
                            side,
                            d: (g.c - base.c).norm(),
                            normal_offset: ((g.c - base.c) * tangent.conj()).im,
                        })
                        .map_err(csv_io(&squeeze_path))?;
                    GammaRow {
                        n,
                        side,
                        t,
                        re: Some(g.c.re),
                        im: Some(g.c.im),
                        residual: Some(g.newton_residual),
                        multiplier_abs: Some(g.multiplier.norm()),
                        status: "ok".into(),
                    }
                }
                Err(e) => {
                    failures.push(format!("n={n} {side}: {e}"));
                    GammaRow { n, side, t, re: None, im: None, residual: None, multiplier_abs: None, status: e.to_string() }
                }
            };
            points.serialize(row).map_err(csv_io(&points_path))?;
        }
        points.flush().map_err(|e| CliError::Io(e.to_string()))?;
        squeeze.flush().map_err(|e| CliError::Io(e.to_string()))?;
        written.extend([points_path, squeeze_path]);
    } else {
        for &n in &ns {
            for &side in &c.sides {
                let path = with_suffix(&c.out, &format!(".n{n}.{side}.csv"));
                match gamma_curve(&c.address, c.t.start, c.t.stop, c.t.steps, n, side, &c.options) {
                    Ok(line) => {
                        line.save(&path)?;
                        written.push(path);
                        if line.len() < c.t.steps {
                            failures.push(format!("n={n} {side}: curve stopped after {} points", line.len()));
                        }
                    }
                    Err(e) => failures.push(format!("n={n} {side}: {e}")),
                }
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numeric(failures.join("\n")))
    }
}

fn load_line(prefix: &Path) -> Result<SeparationLine, CliError> {
    Ok(SeparationLine::load(&with_suffix(prefix, ".line.csv"), &with_suffix(prefix, ".line.json"))?)
}

fn run_probe(c: &ProbeConfig, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    match c {
        ProbeConfig::Landing { address, t, ray, out } => {
            let report = landing_probe(address, &t.values()?, ray)?;
            let path = with_suffix(out, ".json");
            write_json(&path, &report)?;
            written.push(path);
            if !report.complete {
                return Err(CliError::Numeric(format!("ray {address} could not be followed to t = {}", t.stop)));
            }
        }
        ProbeConfig::Fiber { family, base, candidates, lines, out } => {
            let lines = lines.iter().map(|p| load_line(p)).collect::<Result<Vec<_>, _>>()?;
            let report = fiber_probe(*family, *base, candidates, &lines)?;
            let path = with_suffix(out, ".json");
            write_json(&path, &report)?;
            written.push(path);
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
pub struct Verdict {
    pub a: Complex64,
    pub b: Complex64,
    pub separated: Option<bool>,
    pub error: Option<String>,
}

fn run_separate(c: &SeparateConfig, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let line = build_separation_line(&c.segments, &c.options)?;
    let (csv, sidecar) = (with_suffix(&c.out, ".line.csv"), with_suffix(&c.out, ".line.json"));
    line.save(&csv, &sidecar)?;
    let verdicts: Vec<Verdict> = c
        .queries
        .iter()
        .map(|&[a, b]| match line.separates(a, b) {
            Ok(s) => Verdict { a, b, separated: Some(s), error: None },
            Err(e) => Verdict { a, b, separated: None, error: Some(e.to_string()) },
        })
        .collect();
    let path = with_suffix(&c.out, ".json");
    write_json(&path, &verdicts)?;
    written.extend([csv, sidecar, path]);
    Ok(())
}

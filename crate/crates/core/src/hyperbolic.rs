//! Hyperbolic components: period-1 internal rays from closed forms, and
//! curves of attracting parameters that accumulate on an exponential ray.
//!
//! For a ray point `c_0` with orbit `z_k`, the parameter `c_n` solving
//! `E_c^(n-2)(c) = z_(n-2) +/- i pi` sends the orbit to the far left half
//! plane at step `n - 1` and back near `c` at step `n`, which creates an
//! attracting cycle of period `n` close to the ray.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::address::ExternalAddress;
use crate::dynamics::{classify, iterate_with_derivative, orbit, Classification, ClassifyOptions, EscapePolicy, Family};
use crate::error::{Error, Result};
use crate::exponential::{geometric_grid, ray_point, RayOptions, RayTracker};
use crate::polyline::Polyline;

/// Classifier settings for validating internal-ray points, which may sit
/// close to the component boundary where convergence is slow.
pub fn validation_options() -> ClassifyOptions {
    ClassifyOptions {
        n_max: 50_000,
        ..ClassifyOptions::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSample {
    pub c: Complex64,
    pub period: usize,
    pub multiplier: Complex64,
    pub family: Family,
    /// `d c^(d-1)` for unicritical families; not used for iteration.
    pub normal_form_lambda: Option<Complex64>,
}

impl ComponentSample {
    pub fn from_classification(family: Family, c: Complex64, verdict: &Classification) -> Option<Self> {
        match verdict {
            Classification::Attracting { period, multiplier, .. } => Some(ComponentSample {
                c,
                period: *period,
                multiplier: *multiplier,
                family,
                normal_form_lambda: family.degree().map(|d| c.powu(d - 1) * d as f64),
            }),
            _ => None,
        }
    }
}

/// Period-1 parameter with multiplier `lambda`; `prev` selects the branch
/// nearest a previous point.
fn period_one_parameter(family: Family, lambda: Complex64, prev: Option<Complex64>) -> Result<Complex64> {
    match family {
        Family::Exponential => {
            if lambda.norm() == 0.0 {
                return Err(Error::InvalidInput("multiplier 0 is not realized in the exponential family".into()));
            }
            // fixed point z = log(lambda), c = z - e^z
            let mut c = lambda.ln() - lambda;
            if let Some(p) = prev {
                let k = ((p.im - c.im) / (2.0 * PI)).round();
                c.im += 2.0 * PI * k;
            }
            Ok(c)
        }
        Family::Unicritical { degree } => {
            // fixed point with d z^(d-1) = lambda, c = z - z^d
            let d = degree as f64;
            let root = (lambda / d).powf(1.0 / (d - 1.0));
            let fixed_to_c = |z: Complex64| z - z.powu(degree);
            let Some(p) = prev else {
                return Ok(fixed_to_c(root));
            };
            let turn = 2.0 * PI / (d - 1.0);
            Ok((0..degree - 1)
                .map(|j| fixed_to_c(root * Complex64::from_polar(1.0, turn * j as f64)))
                .min_by(|a, b| (a - p).norm().total_cmp(&(b - p).norm()))
                .unwrap())
        }
    }
}

/// Internal ray of the period-1 component along `lambda_path`. Every point
/// is re-validated by the classifier (period 1, multiplier within 1e-8).
pub fn internal_ray_p1(family: Family, lambda_path: &[Complex64]) -> Result<Polyline> {
    if let Some(l) = lambda_path.iter().find(|l| !(l.norm() < 1.0)) {
        return Err(Error::InvalidInput(format!("multiplier {l} is not attracting")));
    }
    let opts = validation_options();
    let mut prev = None;
    let mut cs = Vec::with_capacity(lambda_path.len());
    for &lambda in lambda_path {
        let c = period_one_parameter(family, lambda, prev)?;
        let verdict = classify(family, c, &opts);
        let ok = verdict.period() == Some(1) && verdict.multiplier().is_some_and(|m| (m - lambda).norm() < 1e-8);
        if !ok {
            return Err(Error::ValidationFailed { lambda, found: verdict });
        }
        cs.push(c);
        prev = Some(c);
    }
    let mut line = Polyline::new();
    for (i, c) in cs.into_iter().enumerate() {
        line.push(c, i as f64, 0.0)?;
    }
    Ok(line)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Above,
    Below,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Above => 1.0,
            Side::Below => -1.0,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Above => "above",
            Side::Below => "below",
        })
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "above" | "+" => Ok(Side::Above),
            "below" | "-" => Ok(Side::Below),
            _ => Err(Error::Parse { pos: 0, msg: format!("expected `above` or `below`, got `{s}`") }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaPoint {
    pub c: Complex64,
    pub n: usize,
    pub side: Side,
    pub address: ExternalAddress,
    pub t: f64,
    /// Ray point the construction starts from.
    pub base: Complex64,
    pub newton_residual: f64,
    pub multiplier: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaOptions {
    pub ray: RayOptions,
    /// Number of homotopy stages for the shift `0 -> +/- i pi`.
    pub stages: usize,
    pub newton_steps: usize,
    pub classify: ClassifyOptions,
}

impl Default for GammaOptions {
    fn default() -> Self {
        GammaOptions {
            ray: RayOptions::default(),
            stages: 16,
            newton_steps: 50,
            classify: ClassifyOptions::default(),
        }
    }
}

const BASE_RESIDUAL: f64 = 1e-10;
const NEAR_ORBIT: f64 = 1.0;

/// Ray point and its forward orbit `z_0..=z_(n-2)`.
struct Base {
    c: Complex64,
    orbit: Vec<Complex64>,
}

fn unreachable_at(t: f64, n: usize, reason: impl Into<String>) -> Error {
    Error::PerturbationUnreachable { t, n, reason: reason.into() }
}

fn base_point(address: &ExternalAddress, t: f64, n: usize, opts: &GammaOptions, seed: Option<Complex64>) -> Result<Base> {
    if n < 4 {
        return Err(Error::InvalidInput(format!("period must be at least 4, got {n}")));
    }
    let p = ray_point(address, t, &opts.ray, seed)?;
    if !p.converged || p.residual >= BASE_RESIDUAL {
        return Err(unreachable_at(t, n, format!("ray point residual {:.3e}", p.residual)));
    }
    if n - 2 > p.depth {
        return Err(unreachable_at(
            t,
            n,
            format!("needs orbit level {} but the target orbit only resolves depth {}", n - 2, p.depth),
        ));
    }
    let rec = orbit(Family::Exponential, p.c, n - 2, EscapePolicy::OverflowOnly)?;
    if rec.points.len() < n - 1 {
        return Err(unreachable_at(t, n, "ray point orbit overflows before level n-2"));
    }
    Ok(Base { c: p.c, orbit: rec.points })
}

/// Newton on `E_c^m(c) = target`; returns `(c, last |dc|)`.
fn newton_level(m: usize, target: Complex64, mut c: Complex64, steps: usize) -> Option<(Complex64, f64)> {
    for _ in 0..steps {
        let (z, w) = iterate_with_derivative(Family::Exponential, c, m).ok()?;
        let dc = (z - target) / w;
        if !dc.is_finite() {
            return None;
        }
        c -= dc;
        let size = dc.norm();
        if size <= 1e-15 * c.norm().max(1.0) {
            return Some((c, size));
        }
    }
    None
}

fn solve_gamma(
    base: &Base,
    t: f64,
    n: usize,
    side: Side,
    opts: &GammaOptions,
    seed: Option<Complex64>,
) -> Result<(Complex64, f64)> {
    let m = n - 2;
    let shift = Complex64::new(0.0, side.sign() * PI);
    let goal = base.orbit[m] + shift;
    if let Some(s) = seed {
        if let Some(hit) = newton_level(m, goal, s, opts.newton_steps) {
            return Ok(hit);
        }
    }
    // homotopy from the ray point, where the unshifted equation holds
    let stages = opts.stages.max(1);
    let mut c = base.c;
    let mut residual = 0.0;
    for j in 1..=stages {
        let target = base.orbit[m] + shift * (j as f64 / stages as f64);
        let (next, r) = newton_level(m, target, c, opts.newton_steps)
            .ok_or_else(|| unreachable_at(t, n, format!("Newton diverged at homotopy stage {j}/{stages}")))?;
        c = next;
        residual = r;
    }
    Ok((c, residual))
}

fn verify_gamma(base: &Base, c: Complex64, t: f64, n: usize, opts: &GammaOptions) -> Result<Complex64> {
    let rec = orbit(Family::Exponential, c, n - 3, EscapePolicy::OverflowOnly)?;
    for k in 0..=n - 3 {
        let dev = rec.points.get(k).map_or(f64::INFINITY, |z| (z - base.orbit[k]).norm());
        if !(dev < NEAR_ORBIT) {
            return Err(unreachable_at(t, n, format!("orbit leaves the ray orbit at step {k} (|dz| = {dev:.3e})")));
        }
    }
    let verdict = classify(Family::Exponential, c, &opts.classify);
    match verdict {
        Classification::Attracting { period, multiplier, .. } if period == n => Ok(multiplier),
        found => Err(Error::PeriodMismatch { expected: n, found }),
    }
}

fn gamma_point_seeded(
    address: &ExternalAddress,
    t: f64,
    n: usize,
    side: Side,
    opts: &GammaOptions,
    ray_seed: Option<Complex64>,
    seed: Option<Complex64>,
) -> Result<GammaPoint> {
    let base = base_point(address, t, n, opts, ray_seed)?;
    let (c, newton_residual) = solve_gamma(&base, t, n, side, opts, seed)?;
    let multiplier = verify_gamma(&base, c, t, n, opts)?;
    Ok(GammaPoint {
        c,
        n,
        side,
        address: address.clone(),
        t,
        base: base.c,
        newton_residual,
        multiplier,
    })
}

/// Attracting parameter of period `n` next to the ray point `G_s(t)`.
pub fn gamma_point(address: &ExternalAddress, t: f64, n: usize, side: Side, opts: &GammaOptions) -> Result<GammaPoint> {
    gamma_point_seeded(address, t, n, side, opts, None, None)
}

/// `gamma_point` over a geometric grid of ray parameters, each Newton solve
/// warm-started from the previous curve point.
pub fn gamma_curve(
    address: &ExternalAddress,
    t_hi: f64,
    t_lo: f64,
    steps: usize,
    n: usize,
    side: Side,
    opts: &GammaOptions,
) -> Result<Polyline> {
    let ts = geometric_grid(t_hi, t_lo, steps)?;
    let first = gamma_point(address, ts[0], n, side, opts).map_err(|e| Error::FirstPointFailed(e.to_string()))?;
    let mut line = Polyline::new();
    line.push(first.c, ts[0], first.newton_residual)?;
    let mut tracker = RayTracker::new(address, &opts.ray, ts[0], first.base);
    let mut gamma_c = first.c;
    for &t in &ts[1..] {
        let ray = match tracker.advance(t) {
            Ok(p) if p.converged => p.c,
            _ => {
                log::warn!("gamma curve n={n}: ray continuation failed at t={t}; truncating");
                break;
            }
        };
        match gamma_point_seeded(address, t, n, side, opts, Some(ray), Some(gamma_c)) {
            Ok(g) => {
                line.push(g.c, t, g.newton_residual)?;
                gamma_c = g.c;
            }
            Err(e) => {
                log::warn!("gamma curve n={n}: {e}; truncating at t={t}");
                break;
            }
        }
    }
    Ok(line)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeRow {
    pub n: usize,
    pub d_plus: f64,
    pub d_minus: f64,
    /// Signed offset of the curve point normal to the ray, positive to the
    /// left of the direction of increasing `t`.
    pub side_plus: f64,
    pub side_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezeReport {
    pub address: ExternalAddress,
    pub t: f64,
    pub ray_point: Complex64,
    /// Unit tangent of the ray in the direction of increasing `t`.
    pub tangent: Complex64,
    pub rows: Vec<SqueezeRow>,
}

impl SqueezeReport {
    pub fn plus_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].d_plus < w[0].d_plus)
    }

    pub fn minus_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].d_minus < w[0].d_minus)
    }

    pub fn opposite_sides(&self) -> bool {
        self.rows.iter().all(|r| r.side_plus > 0.0 && r.side_minus < 0.0)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for row in &self.rows {
            wr.serialize(row)?;
        }
        if self.rows.is_empty() {
            wr.write_record(["n", "d_plus", "d_minus", "side_plus", "side_minus"])?;
        }
        wr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Unit tangent to the ray at `t` by a central difference in `t`.
pub fn ray_tangent(address: &ExternalAddress, t: f64, c: Complex64, opts: &RayOptions) -> Result<Complex64> {
    let h = 1e-5 * t;
    let up = ray_point(address, t + h, opts, Some(c))?;
    let down = ray_point(address, t - h, opts, Some(c))?;
    let d = up.c - down.c;
    if !(up.converged && down.converged) || d.norm() == 0.0 {
        return Err(Error::FirstPointFailed(format!("no tangent for the ray at t={t}")));
    }
    Ok(d / d.norm())
}

/// Distances `|gamma_n^(+/-)(t) - G_s(t)|` and signed normal offsets for
/// each `n` in `ns`.
pub fn squeeze_check(address: &ExternalAddress, t: f64, ns: &[usize], opts: &GammaOptions) -> Result<SqueezeReport> {
    if ns.is_empty() {
        return Err(Error::InvalidInput("empty period range".into()));
    }
    let base = ray_point(address, t, &opts.ray, None)?;
    if !base.converged {
        return Err(unreachable_at(t, ns[0], format!("ray point residual {:.3e}", base.residual)));
    }
    let tangent = ray_tangent(address, t, base.c, &opts.ray)?;
    let rows = ns
        .par_iter()
        .map(|&n| -> Result<SqueezeRow> {
            let plus = gamma_point_seeded(address, t, n, Side::Above, opts, Some(base.c), None)?;
            let minus = gamma_point_seeded(address, t, n, Side::Below, opts, Some(base.c), None)?;
            let normal = |g: Complex64| ((g - base.c) * tangent.conj()).im;
            Ok(SqueezeRow {
                n,
                d_plus: (plus.c - base.c).norm(),
                d_minus: (minus.c - base.c).norm(),
                side_plus: normal(plus.c),
                side_minus: normal(minus.c),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for w in rows.windows(2) {
        if w[1].d_plus >= w[0].d_plus || w[1].d_minus >= w[0].d_minus {
            log::warn!("squeeze: distance did not shrink from n={} to n={}", w[0].n, w[1].n);
        }
    }
    Ok(SqueezeReport {
        address: address.clone(),
        t,
        ray_point: base.c,
        tangent,
        rows,
    })
}

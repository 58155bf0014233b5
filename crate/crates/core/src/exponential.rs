//! Parameter rays of `e^z + c`.
//!
//! A ray point for address `s` and parameter `t` is the fixed point of the
//! pullback map: start from the target `F^N(t) + 2 pi i s_{N+1}` (with
//! `F(x) = e^x - 1`) at the deepest level `N` that fits in binary64, pull
//! back through `w_{k-1} = Log(w_k - c) + 2 pi i s_k` and require `w_0 = c`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::address::ExternalAddress;
use crate::dynamics::{classify, orbit, Classification, ClassifyOptions, EscapePolicy, Family};
use crate::error::{Error, Result};
use crate::polyline::{land_estimate, Polyline};

pub const DEFAULT_DEPTH_CAP: f64 = 700.0;
const MAX_DEPTH: usize = 100_000;
const MAX_HALVINGS: usize = 12;
/// Unseeded points below this parameter are reached by continuation from it.
const CONTINUATION_START: f64 = 1.0;
const CONTINUATION_RATIO: f64 = 0.85;
const MIN_STEP_RATIO: f64 = 0.9999;
const MAX_SUBSTEPS: usize = 2000;
const JUMP_FACTOR: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayOptions {
    pub tol: f64,
    pub max_rounds: usize,
    pub depth_cap: f64,
}

impl Default for RayOptions {
    fn default() -> Self {
        RayOptions {
            tol: 1e-12,
            max_rounds: 64,
            depth_cap: DEFAULT_DEPTH_CAP,
        }
    }
}

/// Asymptotic orbit `F^k(t) + 2 pi i s_{k+1}` for `k = 0..=depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct RayTargetE {
    pub address: ExternalAddress,
    pub t: f64,
    pub depth: usize,
    /// `F^k(t)` for `k = 0..=depth`.
    pub levels: Vec<f64>,
    pub targets: Vec<Complex64>,
}

fn strip(s: i64) -> f64 {
    2.0 * PI * s as f64
}

pub fn target_orbit(address: &ExternalAddress, t: f64, depth_cap: f64) -> Result<RayTargetE> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("ray parameter must be positive, got {t}")));
    }
    if !(t <= depth_cap) {
        return Err(Error::InvalidInput(format!("ray parameter {t} exceeds the depth cap {depth_cap}")));
    }
    let mut levels = vec![t];
    loop {
        let next = levels.last().unwrap().exp_m1();
        if !(next <= depth_cap) {
            break;
        }
        if levels.len() > MAX_DEPTH {
            return Err(Error::InvalidInput(format!("ray parameter {t} is too small: depth exceeds {MAX_DEPTH}")));
        }
        levels.push(next);
    }
    let targets = levels
        .iter()
        .enumerate()
        .map(|(k, &x)| Complex64::new(x, strip(address.entry(k + 1))))
        .collect();
    Ok(RayTargetE {
        address: address.clone(),
        t,
        depth: levels.len() - 1,
        levels,
        targets,
    })
}

impl RayTargetE {
    /// Pullback values `w_0..=w_N` for the guess `c`, with `dw_k/dc`.
    ///
    /// `w_N` carries the correction from one virtual level beyond the
    /// depth: `w_N = Log(F^(N+1)(t) + 2 pi i s_{N+2} - c) + 2 pi i s_{N+1}`,
    /// expanded so that `e^(F^N(t))` is never formed.
    pub fn pullback(&self, c: Complex64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let n = self.depth;
        let one = Complex64::new(1.0, 0.0);
        let decay = (-self.levels[n]).exp();
        let a = one + c - Complex64::new(0.0, strip(self.address.entry(n + 2)));
        let u = -a * decay;
        let mut w = vec![Complex64::new(0.0, 0.0); n + 1];
        let mut dw = vec![Complex64::new(0.0, 0.0); n + 1];
        w[n] = self.targets[n] + log1p(u);
        dw[n] = -decay / (one + u);
        for k in (1..=n).rev() {
            let diff = w[k] - c;
            if diff.norm() == 0.0 || !diff.is_finite() {
                return Err(Error::PullbackSingular { level: k });
            }
            w[k - 1] = diff.ln() + Complex64::new(0.0, strip(self.address.entry(k)));
            dw[k - 1] = (dw[k] - one) / diff;
        }
        Ok((w, dw))
    }
}

fn log1p(u: Complex64) -> Complex64 {
    if u.norm() < 1e-4 {
        // alternating series; four terms reach binary64 precision here
        u - u * u / 2.0 + u * u * u / 3.0 - u * u * u * u / 4.0
    } else {
        (Complex64::new(1.0, 0.0) + u).ln()
    }
}

/// Result of refining one ray point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayPoint {
    pub c: Complex64,
    /// Size of the last accepted correction.
    pub residual: f64,
    pub rounds: usize,
    pub converged: bool,
    pub depth: usize,
}

/// Solves `w_0(c) = c` for the pullback above, starting from `start`.
///
/// The outer iteration is Newton on `w_0(c) - c` with step halving; a step
/// is only taken if it reduces `|w_0(c) - c|`. If no halving helps, the
/// current point is returned unconverged.
fn refine(target: &RayTargetE, start: Complex64, opts: &RayOptions) -> Result<RayPoint> {
    let mismatch = |c: Complex64| -> Result<(Complex64, Complex64)> {
        let (w, dw) = target.pullback(c)?;
        Ok((w[0] - c, dw[0] - Complex64::new(1.0, 0.0)))
    };
    let mut c = start;
    let (mut g, mut dg) = mismatch(c)?;
    let mut residual = f64::INFINITY;
    let mut history = Vec::new();
    for round in 1..=opts.max_rounds {
        let step = -g / dg;
        if !step.is_finite() {
            break;
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = c + step * alpha;
            if let Ok((gt, dgt)) = mismatch(trial) {
                if gt.norm() < g.norm() || (gt.norm() == g.norm() && alpha == 1.0) {
                    accepted = Some((trial, gt, dgt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((trial, gt, dgt)) = accepted else {
            // no improving step: c is as good as binary64 allows, or stuck
            let converged = g.norm() <= opts.tol;
            return Ok(RayPoint { c, residual: residual.min(g.norm()), rounds: round, converged, depth: target.depth });
        };
        residual = (trial - c).norm();
        history.push(residual);
        c = trial;
        g = gt;
        dg = dgt;
        if residual < opts.tol {
            check_contraction(&history);
            return Ok(RayPoint { c, residual, rounds: round, converged: true, depth: target.depth });
        }
    }
    check_contraction(&history);
    Ok(RayPoint { c, residual, rounds: opts.max_rounds, converged: false, depth: target.depth })
}

fn check_contraction(history: &[f64]) {
    for (i, w) in history.windows(2).enumerate().skip(3) {
        if w[1] > 0.5 * w[0] && w[1] > 1e-13 {
            log::debug!("ray refinement round {}: |dc| went {:.3e} -> {:.3e}", i + 2, w[0], w[1]);
        }
    }
}

/// Point of the ray `G_s` at parameter `t`.
///
/// Without a seed the refinement starts at `t + 2 pi i s_1` for `t >= 1`;
/// smaller `t` are reached by continuation from `t = 1`.
pub fn ray_point(address: &ExternalAddress, t: f64, opts: &RayOptions, seed: Option<Complex64>) -> Result<RayPoint> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let target = target_orbit(address, t, opts.depth_cap)?;
    if let Some(c) = seed {
        return refine_checked(&target, c, opts);
    }
    if t >= CONTINUATION_START {
        return refine_checked(&target, target.targets[0], opts);
    }
    let start = ray_point(address, CONTINUATION_START, opts, None)?;
    if !start.converged {
        return Ok(start);
    }
    continue_ray(address, CONTINUATION_START, start.c, t, opts)
}

/// Refinement followed by a forward check: the orbit of the solution must
/// reproduce its pullback values, which rules out spurious fixed points
/// produced by cancellation in the pullback.
fn refine_checked(target: &RayTargetE, start: Complex64, opts: &RayOptions) -> Result<RayPoint> {
    let mut p = refine(target, start, opts)?;
    if p.converged && !orbit_matches_pullback(target, p.c) {
        log::debug!("t={}: refined point {} does not reproduce its pullback", target.t, p.c);
        p.converged = false;
    }
    Ok(p)
}

fn orbit_matches_pullback(target: &RayTargetE, c: Complex64) -> bool {
    let Ok((w, _)) = target.pullback(c) else { return false };
    let Ok(dev) = forward_deviation(target, c) else { return false };
    dev.iter().zip(&w).all(|(d, wk)| *d <= 1e-6 * wk.norm().max(1.0))
}

/// Continuation state along one ray: the last accepted point and the
/// velocity `dc / d(log t)` used to predict the next one.
#[derive(Debug, Clone)]
pub struct RayTracker<'a> {
    address: &'a ExternalAddress,
    opts: RayOptions,
    t: f64,
    c: Complex64,
    velocity: Option<Complex64>,
}

impl<'a> RayTracker<'a> {
    pub fn new(address: &'a ExternalAddress, opts: &RayOptions, t: f64, c: Complex64) -> Self {
        RayTracker { address, opts: *opts, t, c, velocity: None }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn c(&self) -> Complex64 {
        self.c
    }

    /// Moves to parameter `to` in geometric sub-steps, shrinking the step
    /// after each failure. A refined point that lands far from the
    /// predicted one counts as a failure (it belongs to another branch).
    pub fn advance(&mut self, to: f64) -> Result<RayPoint> {
        let mut ratio = CONTINUATION_RATIO;
        let mut last = None;
        for _ in 0..MAX_SUBSTEPS {
            let next = if to < self.t { (self.t * ratio).max(to) } else { (self.t / ratio).min(to) };
            let dlog = (next / self.t).ln();
            let guess = match self.velocity {
                Some(v) => self.c + v * dlog,
                None => self.c,
            };
            let p = ray_point(self.address, next, &self.opts, Some(guess))?;
            let predicted = (guess - self.c).norm();
            let jump = (p.c - self.c).norm();
            let plausible = self.velocity.is_none() || jump <= JUMP_FACTOR * predicted + 1e-9;
            if p.converged && plausible {
                self.velocity = Some((p.c - self.c) / dlog);
                self.t = next;
                self.c = p.c;
                if next == to {
                    return Ok(p);
                }
                ratio = (ratio * ratio).max(CONTINUATION_RATIO);
            } else {
                ratio = ratio.sqrt();
                if ratio > MIN_STEP_RATIO {
                    return Ok(RayPoint { converged: false, ..p });
                }
            }
            last = Some(RayPoint { converged: false, ..p });
        }
        Ok(last.expect("at least one sub-step"))
    }
}

/// Moves a converged ray point from parameter `from` to `to`.
pub fn continue_ray(
    address: &ExternalAddress,
    from: f64,
    c: Complex64,
    to: f64,
    opts: &RayOptions,
) -> Result<RayPoint> {
    RayTracker::new(address, opts, from, c).advance(to)
}

/// `|E_c^k(c) - w_k|` for `k = 0..=N`, comparing the forward orbit of the
/// returned parameter against its own pullback values.
pub fn forward_deviation(target: &RayTargetE, c: Complex64) -> Result<Vec<f64>> {
    let (w, _) = target.pullback(c)?;
    let rec = orbit(Family::Exponential, c, target.depth.max(1), EscapePolicy::OverflowOnly)?;
    Ok(w.iter()
        .enumerate()
        .map(|(k, wk)| rec.points.get(k).map_or(f64::INFINITY, |z| (z - wk).norm()))
        .collect())
}

/// `max_k |E_c^k(c) - (F^k(t) + 2 pi i s_{k+1})|` style deviations against the
/// asymptotic targets themselves.
pub fn target_deviation(target: &RayTargetE, c: Complex64) -> Result<Vec<f64>> {
    let rec = orbit(Family::Exponential, c, target.depth.max(1), EscapePolicy::OverflowOnly)?;
    Ok(target
        .targets
        .iter()
        .enumerate()
        .map(|(k, tk)| rec.points.get(k).map_or(f64::INFINITY, |z| (z - tk).norm()))
        .collect())
}

/// Levels `k < N` where `Im E_c^k(c)` leaves `(2 pi s_{k+1} - pi, 2 pi s_{k+1} + pi]`.
pub fn branch_violations(target: &RayTargetE, c: Complex64) -> Result<Vec<usize>> {
    let rec = orbit(Family::Exponential, c, target.depth.max(1), EscapePolicy::OverflowOnly)?;
    Ok((0..target.depth)
        .filter(|&k| {
            let Some(z) = rec.points.get(k) else { return true };
            let mid = strip(target.address.entry(k + 1));
            !(z.im > mid - PI && z.im <= mid + PI)
        })
        .collect())
}

/// `steps` parameters from `hi` to `lo`, geometrically spaced.
pub fn geometric_grid(hi: f64, lo: f64, steps: usize) -> Result<Vec<f64>> {
    if !(hi > lo && lo > 0.0) || steps < 2 {
        return Err(Error::InvalidInput(format!(
            "need hi > lo > 0 and at least 2 steps, got {hi}, {lo}, {steps}"
        )));
    }
    let ratio = (lo / hi).powf(1.0 / (steps - 1) as f64);
    let mut out: Vec<f64> = (0..steps).map(|i| hi * ratio.powi(i as i32)).collect();
    out[steps - 1] = lo;
    Ok(out)
}

fn trace_grid(address: &ExternalAddress, ts: &[f64], opts: &RayOptions) -> Result<Polyline> {
    let first = match ray_point(address, ts[0], opts, None) {
        Ok(p) if p.converged => p,
        Ok(p) => {
            return Err(Error::FirstPointFailed(format!(
                "t={}: not converged, residual {:.3e}",
                ts[0], p.residual
            )))
        }
        Err(e) => return Err(Error::FirstPointFailed(format!("t={}: {e}", ts[0]))),
    };
    let mut line = Polyline::new();
    line.push(first.c, ts[0], first.residual)?;
    let mut tracker = RayTracker::new(address, opts, ts[0], first.c);
    for (i, &t) in ts.iter().enumerate().skip(1) {
        match tracker.advance(t) {
            Ok(p) if p.converged => {
                line.push(p.c, t, p.residual)?;
            }
            _ => {
                log::warn!("ray {address}: refinement failed at t={t}; truncating after {i} points");
                break;
            }
        }
    }
    Ok(line)
}

/// Ray points on a geometric grid from `t_hi` to `t_lo`, each warm-started
/// from its predecessor.
pub fn trace_ray_e(address: &ExternalAddress, t_hi: f64, t_lo: f64, steps: usize, opts: &RayOptions) -> Result<Polyline> {
    if !(t_hi > t_lo && t_lo > 0.0) || steps < 2 {
        return Err(Error::InvalidInput(format!(
            "need t_hi > t_lo > 0 and steps >= 2, got {t_hi}, {t_lo}, {steps}"
        )));
    }
    trace_grid(address, &geometric_grid(t_hi, t_lo, steps)?, opts)
}

/// Same as [`trace_ray_e`] over an arbitrary monotone list of parameters.
pub fn trace_ray_e_at(address: &ExternalAddress, ts: &[f64], opts: &RayOptions) -> Result<Polyline> {
    if ts.is_empty() {
        return Err(Error::InvalidInput("empty parameter list".into()));
    }
    trace_grid(address, ts, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub address: String,
    pub t: f64,
    pub c_re: f64,
    pub c_im: f64,
    pub residual: f64,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandingReport {
    pub address: String,
    pub points: Vec<ProbeRecord>,
    pub tail_point: [f64; 2],
    pub tail_diameter: f64,
    /// Verdict at the smallest traced parameter.
    pub final_verdict: String,
    /// Verdicts on a small circle around the final point.
    pub neighborhood: Vec<String>,
    /// False when refinement failed before the last requested parameter.
    pub complete: bool,
}

const PROBE_TAIL: f64 = 0.25;
const PROBE_RADIUS: f64 = 1e-3;
const PROBE_SAMPLES: usize = 8;

/// Traces the ray through `ts` (decreasing) and classifies the end of the
/// trace and a small disk around it. Refinement failure at small `t` ends
/// the trace early and marks the report incomplete.
pub fn landing_probe(address: &ExternalAddress, ts: &[f64], opts: &RayOptions) -> Result<LandingReport> {
    if ts.is_empty() || ts.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("parameters must be nonempty and strictly decreasing".into()));
    }
    let line = trace_ray_e_at(address, ts, opts)?;
    let copts = ClassifyOptions::default();
    let verdict = |c: Complex64| classify(Family::Exponential, c, &copts);
    let name = address.to_string();
    let points = line
        .points()
        .iter()
        .map(|p| ProbeRecord {
            address: name.clone(),
            t: p.t,
            c_re: p.c.re,
            c_im: p.c.im,
            residual: p.residual,
            verdict: verdict(p.c).summary(),
        })
        .collect();
    let (tail, diameter) = land_estimate(&line, PROBE_TAIL)?;
    let last = line.last().unwrap().c;
    let neighborhood = (0..PROBE_SAMPLES)
        .map(|j| {
            let u = Complex64::from_polar(PROBE_RADIUS, 2.0 * PI * j as f64 / PROBE_SAMPLES as f64);
            verdict(last + u).summary()
        })
        .collect();
    Ok(LandingReport {
        address: name,
        points,
        tail_point: [tail.re, tail.im],
        tail_diameter: diameter,
        final_verdict: verdict(last).summary(),
        neighborhood,
        complete: line.len() == ts.len(),
    })
}

impl LandingReport {
    pub fn final_classification(&self, opts: &ClassifyOptions) -> Classification {
        let p = self.points.last().unwrap();
        classify(Family::Exponential, Complex64::new(p.c_re, p.c_im), opts)
    }
}

//! Separation lines: simple arcs to infinity assembled from parameter rays,
//! period-1 internal rays and user polylines, and the crossing-parity test
//! that decides whether two parameters lie on different sides of one.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::address::ExternalAddress;
use crate::dynamics::{classify, ClassifyOptions, Family};
use crate::error::{Error, Result};
use crate::exponential::{trace_ray_e, RayOptions};
use crate::hyperbolic::{internal_ray_p1, validation_options};
use crate::polyline::Polyline;
use crate::quadratic::{potential_schedule, trace_ray_q, ExternalAngle, SEED_POTENTIAL};

pub const DEFAULT_JOIN_TOL: f64 = 1e-2;
const MIN_QUERY_DISTANCE: f64 = 1e-9;
const JITTER: f64 = 1e-7;
const EXTENSION_FACTOR: f64 = 10.0;
/// Internal-arc and user points classified per segment as a spot check.
const SPOT_SAMPLES: usize = 16;

fn two() -> u32 {
    2
}
fn eight() -> f64 {
    8.0
}
fn ninety() -> f64 {
    0.9
}

/// Multipliers along a period-1 internal path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaPath {
    Points(Vec<Complex64>),
    /// `r(s) e^(2 pi i theta(s))` for `s` in `[0, 1]`, with `theta` linear
    /// from `from` to `to` (in turns) and `r` bending from `radius` at the
    /// ends to `mid_radius` halfway.
    Arc {
        radius: f64,
        #[serde(default)]
        mid_radius: Option<f64>,
        from: f64,
        to: f64,
        steps: usize,
    },
}

impl LambdaPath {
    pub fn points(&self) -> Result<Vec<Complex64>> {
        match self {
            LambdaPath::Points(p) => Ok(p.clone()),
            &LambdaPath::Arc { radius, mid_radius, from, to, steps } => {
                if steps < 2 {
                    return Err(Error::InvalidInput("a multiplier arc needs at least 2 steps".into()));
                }
                let mid = mid_radius.unwrap_or(radius);
                Ok((0..steps)
                    .map(|i| {
                        let s = i as f64 / (steps - 1) as f64;
                        let r = radius + (mid - radius) * (PI * s).sin();
                        Complex64::from_polar(r, 2.0 * PI * (from + (to - from) * s))
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentSpec {
    QuadraticRay {
        #[serde(default = "two")]
        degree: u32,
        angle: ExternalAngle,
        #[serde(default = "eight")]
        start: f64,
        floor: f64,
        #[serde(default = "ninety")]
        ratio: f64,
    },
    ExponentialRay {
        address: ExternalAddress,
        t_hi: f64,
        t_lo: f64,
        steps: usize,
    },
    InternalP1 {
        family: Family,
        lambda: LambdaPath,
    },
    User {
        points: Vec<Complex64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Ray { label: String },
    InternalP1 { family: String, lambda_first: Complex64, lambda_last: Complex64 },
    User { points: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub provenance: Provenance,
    /// Range of arc vertices contributed by this segment.
    pub first: usize,
    pub last: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Bounds {
    fn of(points: &[Complex64]) -> Self {
        let mut b = Bounds {
            re_min: f64::INFINITY,
            re_max: f64::NEG_INFINITY,
            im_min: f64::INFINITY,
            im_max: f64::NEG_INFINITY,
        };
        for p in points {
            b.re_min = b.re_min.min(p.re);
            b.re_max = b.re_max.max(p.re);
            b.im_min = b.im_min.min(p.im);
            b.im_max = b.im_max.max(p.im);
        }
        b
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn diameter(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationLine {
    pub arc: Polyline,
    /// Unit directions in which the first and the last vertex continue to
    /// infinity.
    pub end_directions: [Complex64; 2],
    pub window: Bounds,
    pub segments: Vec<SegmentRecord>,
    /// Spot-check findings on internal and user segments.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineOptions {
    pub join_tol: f64,
    pub ray: RayOptions,
}

impl Default for LineOptions {
    fn default() -> Self {
        LineOptions {
            join_tol: DEFAULT_JOIN_TOL,
            ray: RayOptions::default(),
        }
    }
}

fn materialize(spec: &SegmentSpec, opts: &LineOptions) -> Result<(Vec<Complex64>, Provenance)> {
    match spec {
        SegmentSpec::QuadraticRay { degree, angle, start, floor, ratio } => {
            let family = Family::unicritical(*degree)?;
            let hs = potential_schedule(*start, *floor, *ratio)?;
            let ray = trace_ray_q(family, *angle, &hs, SEED_POTENTIAL)?;
            if ray.len() < hs.len() {
                log::warn!("ray {angle} stopped at potential {:.3e}", ray.last().map_or(*start, |p| p.t));
            }
            let label = if *degree == 2 { format!("angle {angle}") } else { format!("angle {angle}, degree {degree}") };
            Ok((ray.coords(), Provenance::Ray { label }))
        }
        SegmentSpec::ExponentialRay { address, t_hi, t_lo, steps } => {
            let ray = trace_ray_e(address, *t_hi, *t_lo, *steps, &opts.ray)?;
            if ray.len() < *steps {
                log::warn!("ray {address} stopped at t = {:.3e}", ray.last().map_or(*t_hi, |p| p.t));
            }
            Ok((ray.coords(), Provenance::Ray { label: format!("address {address}") }))
        }
        SegmentSpec::InternalP1 { family, lambda } => {
            let path = lambda.points()?;
            let line = internal_ray_p1(*family, &path)?;
            Ok((
                line.coords(),
                Provenance::InternalP1 {
                    family: family.name(),
                    lambda_first: path[0],
                    lambda_last: *path.last().unwrap(),
                },
            ))
        }
        SegmentSpec::User { points } => Ok((points.clone(), Provenance::User { points: points.len() })),
    }
}

fn spot_check(family: Family, points: &[Complex64], index: usize) -> Option<String> {
    let step = (points.len() / SPOT_SAMPLES).max(1);
    let opts = validation_options();
    let bad = points
        .iter()
        .step_by(step)
        .filter(|c| !classify(family, **c, &opts).is_attracting())
        .count();
    (bad > 0).then(|| format!("segment {index}: {bad} sampled points are not attracting"))
}

/// Assembles the segments into one arc. Each segment is oriented so that
/// it starts next to the end of the previous one; gaps up to `join_tol`
/// are bridged by straight joins.
pub fn build_separation_line(specs: &[SegmentSpec], opts: &LineOptions) -> Result<SeparationLine> {
    if specs.is_empty() {
        return Err(Error::InvalidInput("a separation line needs at least one segment".into()));
    }
    let mut parts = Vec::with_capacity(specs.len());
    for spec in specs {
        let (pts, prov) = materialize(spec, opts)?;
        if pts.is_empty() {
            return Err(Error::InvalidInput(format!("segment {:?} produced no points", prov)));
        }
        parts.push((pts, prov));
    }
    if parts.len() > 1 {
        let (first, next) = (&parts[0].0, &parts[1].0);
        let end_gap = |p: Complex64| (p - next[0]).norm().min((p - next[next.len() - 1]).norm());
        if end_gap(first[0]) < end_gap(first[first.len() - 1]) {
            parts[0].0.reverse();
        }
    }

    let mut arc: Vec<Complex64> = Vec::new();
    let mut segments = Vec::new();
    let mut warnings = Vec::new();
    for (index, (mut pts, provenance)) in parts.into_iter().enumerate() {
        if let Some(&end) = arc.last() {
            if (pts[pts.len() - 1] - end).norm() < (pts[0] - end).norm() {
                pts.reverse();
            }
            let gap = (pts[0] - end).norm();
            if gap > opts.join_tol {
                return Err(Error::SegmentsDoNotMeet { index, gap });
            }
            if gap == 0.0 {
                pts.remove(0);
            }
        }
        let first = arc.len();
        arc.extend(pts.iter().copied());
        if let SegmentSpec::InternalP1 { family, .. } = &specs[index] {
            warnings.extend(spot_check(*family, &pts, index));
        }
        segments.push(SegmentRecord { provenance, first, last: arc.len().saturating_sub(1) });
    }
    arc.dedup();
    for w in &warnings {
        log::warn!("{w}");
    }
    SeparationLine::from_arc(arc, segments, warnings)
}

impl SeparationLine {
    /// Wraps an explicit arc; the ends continue radially away from the
    /// center of the arc's bounding box.
    pub fn from_arc(arc: Vec<Complex64>, segments: Vec<SegmentRecord>, warnings: Vec<String>) -> Result<Self> {
        if arc.len() < 2 {
            return Err(Error::InvalidInput("a separation line needs at least two points".into()));
        }
        if arc.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite point on the separation line".into()));
        }
        let window = Bounds::of(&arc);
        let center = window.center();
        let outward = |end: Complex64, inner: Complex64| {
            let d = end - center;
            if d.norm() > 1e-12 * window.diameter().max(1e-300) {
                d / d.norm()
            } else {
                let d = end - inner;
                d / d.norm()
            }
        };
        let n = arc.len();
        let end_directions = [outward(arc[0], arc[1]), outward(arc[n - 1], arc[n - 2])];
        let line = SeparationLine {
            arc: Polyline::from_complex(&arc),
            end_directions,
            window,
            segments,
            warnings,
        };
        line.check_simple()?;
        Ok(line)
    }

    fn extension_radius(&self, extra: &[Complex64]) -> f64 {
        let center = self.window.center();
        let reach = extra.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
        (EXTENSION_FACTOR * self.window.diameter()).max(2.0 * reach).max(1.0)
    }

    /// Vertices of the arc with both ends extended to distance `radius`
    /// from the window center.
    fn extended(&self, radius: f64) -> Vec<Complex64> {
        let pts = self.arc.coords();
        let center = self.window.center();
        let far = |p: Complex64, d: Complex64| {
            // p + s d with |p + s d - center| = radius
            let q = p - center;
            let b = (q * d.conj()).re;
            let s = -b + (b * b - q.norm_sqr() + radius * radius).max(0.0).sqrt();
            p + d * s
        };
        let mut out = Vec::with_capacity(pts.len() + 2);
        out.push(far(pts[0], self.end_directions[0]));
        out.extend_from_slice(&pts);
        out.push(far(pts[pts.len() - 1], self.end_directions[1]));
        out
    }

    /// Pairwise test of all non-adjacent segments of the extended arc.
    /// Reported indices are arc segments, with the extensions as -1 and n-1.
    fn check_simple(&self) -> Result<()> {
        let pts = self.extended(self.extension_radius(&[]));
        let m = pts.len() - 1;
        let boxes: Vec<[f64; 4]> = (0..m)
            .map(|i| {
                let (a, b) = (pts[i], pts[i + 1]);
                [a.re.min(b.re), a.re.max(b.re), a.im.min(b.im), a.im.max(b.im)]
            })
            .collect();
        for i in 0..m {
            for j in i + 2..m {
                let (p, q) = (&boxes[i], &boxes[j]);
                if p[1] < q[0] || q[1] < p[0] || p[3] < q[2] || q[3] < p[2] {
                    continue;
                }
                if segments_touch(pts[i], pts[i + 1], pts[j], pts[j + 1]) {
                    return Err(Error::SelfIntersection(i.saturating_sub(1), j.saturating_sub(1)));
                }
            }
        }
        Ok(())
    }

    pub fn distance_to(&self, z: Complex64) -> f64 {
        let pts = self.arc.coords();
        let mut best = f64::INFINITY;
        for w in pts.windows(2) {
            best = best.min(point_segment_distance(z, w[0], w[1]));
        }
        for (end, dir) in [(pts[0], self.end_directions[0]), (pts[pts.len() - 1], self.end_directions[1])] {
            let s = ((z - end) * dir.conj()).re.max(0.0);
            best = best.min((z - end - dir * s).norm());
        }
        best
    }

    /// Crossings of the segment `a -> b` with the extended arc; `None` when
    /// the segment passes through a vertex or runs along an edge.
    fn crossings(&self, pts: &[Complex64], a: Complex64, b: Complex64) -> Option<usize> {
        let scale = (a - b).norm().max(1e-300);
        let (lo_re, hi_re, lo_im, hi_im) = (a.re.min(b.re), a.re.max(b.re), a.im.min(b.im), a.im.max(b.im));
        let mut count = 0;
        for w in pts.windows(2) {
            let (p, q) = (w[0], w[1]);
            if p.re.max(q.re) < lo_re || p.re.min(q.re) > hi_re || p.im.max(q.im) < lo_im || p.im.min(q.im) > hi_im {
                continue;
            }
            let d1 = orient(a, b, p);
            let d2 = orient(a, b, q);
            let d3 = orient(p, q, a);
            let d4 = orient(p, q, b);
            let eps_ab = 1e-12 * scale;
            let eps_pq = 1e-12 * (p - q).norm().max(1e-300);
            let near = |d: f64, len: f64, eps: f64| d.abs() <= eps * len;
            if near(d1, scale, eps_pq) || near(d2, scale, eps_pq) || near(d3, (p - q).norm(), eps_ab) || near(d4, (p - q).norm(), eps_ab) {
                let touching = (d1 <= 0.0 || d2 <= 0.0) && (d1 >= 0.0 || d2 >= 0.0) && (d3 <= 0.0 || d4 <= 0.0) && (d3 >= 0.0 || d4 >= 0.0);
                if touching {
                    return None;
                }
                continue;
            }
            if (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) {
                count += 1;
            }
        }
        Some(count)
    }

    /// Whether `a` and `b` lie in different components of the complement.
    pub fn separates(&self, a: Complex64, b: Complex64) -> Result<bool> {
        for z in [a, b] {
            if !z.is_finite() || self.distance_to(z) <= MIN_QUERY_DISTANCE {
                return Err(Error::DegenerateQuery(z));
            }
        }
        if a == b {
            return Ok(false);
        }
        let pts = self.extended(self.extension_radius(&[a, b]));
        if let Some(n) = self.crossings(&pts, a, b) {
            return Ok(n % 2 == 1);
        }
        // grazing: majority over three jittered copies of the query
        let mut odd = 0;
        let mut votes = 0;
        for k in 0..3 {
            let u = Complex64::from_polar(JITTER, 0.7 + 2.0 * PI * k as f64 / 3.0);
            let v = Complex64::from_polar(JITTER, 1.9 + 2.0 * PI * k as f64 / 3.0);
            if let Some(n) = self.crossings(&pts, a + u, b + v) {
                votes += 1;
                odd += n % 2;
            }
        }
        if votes == 0 {
            return Err(Error::DegenerateQuery(a));
        }
        Ok(2 * odd > votes)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.arc.write_csv(w)
    }

    /// Arc as polyline CSV plus a JSON sidecar with everything else.
    pub fn save(&self, csv_path: &Path, sidecar: &Path) -> Result<()> {
        self.arc.save(csv_path)?;
        let meta = Sidecar {
            end_directions: self.end_directions,
            window: self.window,
            segments: self.segments.clone(),
            warnings: self.warnings.clone(),
        };
        let f = std::fs::File::create(sidecar).map_err(|e| Error::io(sidecar, e))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), &meta)?;
        Ok(())
    }

    pub fn load(csv_path: &Path, sidecar: &Path) -> Result<Self> {
        let arc = Polyline::load(csv_path)?;
        let f = std::fs::File::open(sidecar).map_err(|e| Error::io(sidecar, e))?;
        let meta: Sidecar = serde_json::from_reader(std::io::BufReader::new(f))?;
        Ok(SeparationLine {
            arc,
            end_directions: meta.end_directions,
            window: meta.window,
            segments: meta.segments,
            warnings: meta.warnings,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    end_directions: [Complex64; 2],
    window: Bounds,
    segments: Vec<SegmentRecord>,
    warnings: Vec<String>,
}

fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    ((b - a).conj() * (c - a)).im
}

fn point_segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let s = (((z - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - a - d * s).norm()
}

/// Closed segments `ab` and `cd` share a point.
fn segments_touch(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: Complex64, q: Complex64, r: Complex64| {
        r.re >= p.re.min(q.re) && r.re <= p.re.max(q.re) && r.im >= p.im.min(q.im) && r.im <= p.im.max(q.im)
    };
    (d1 == 0.0 && on(c, d, a)) || (d2 == 0.0 && on(c, d, b)) || (d3 == 0.0 && on(a, b, c)) || (d4 == 0.0 && on(a, b, d))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberProbeReport {
    pub base: Complex64,
    pub candidates: Vec<Complex64>,
    pub separated_from_base: Vec<bool>,
    /// Index of the first separating line, per candidate.
    pub witnesses: Vec<Option<usize>>,
    /// Classifier tag per candidate (`escaping`, `attracting`, `undecided`),
    /// so that callers can drop candidates known to lie on rays.
    pub verdicts: Vec<String>,
}

/// Which candidates some line separates from `base`. Candidates that no
/// line separates are not thereby shown to be in the fiber of `base`.
pub fn fiber_probe(family: Family, base: Complex64, candidates: &[Complex64], lines: &[SeparationLine]) -> Result<FiberProbeReport> {
    let opts = ClassifyOptions::default();
    let mut separated = Vec::with_capacity(candidates.len());
    let mut witnesses = Vec::with_capacity(candidates.len());
    for &c in candidates {
        let mut witness = None;
        for (i, line) in lines.iter().enumerate() {
            if line.separates(base, c)? {
                witness = Some(i);
                break;
            }
        }
        separated.push(witness.is_some());
        witnesses.push(witness);
    }
    Ok(FiberProbeReport {
        base,
        candidates: candidates.to_vec(),
        separated_from_base: separated,
        witnesses,
        verdicts: candidates.iter().map(|&c| classify(family, c, &opts).tag().to_string()).collect(),
    })
}

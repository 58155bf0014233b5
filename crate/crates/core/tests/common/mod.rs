#![allow(dead_code)]

use std::collections::VecDeque;

use param_atlas::separation::{build_separation_line, LineOptions, SegmentSpec, SeparationLine};
use param_atlas::Complex64;

fn build(json: &str) -> SeparationLine {
    let specs: Vec<SegmentSpec> = serde_json::from_str(json).unwrap();
    build_separation_line(&specs, &LineOptions::default()).unwrap()
}

/// Rays 1/3 and 2/3 joined by an internal arc near the root of the
/// period-2 disk; cuts off the 1/2-limb.
pub fn limb_line() -> SeparationLine {
    build(
        r#"[
        {"kind": "quadratic_ray", "angle": "1/3", "floor": 1e-150, "ratio": 0.8},
        {"kind": "internal_p1", "family": "quadratic",
         "lambda": {"radius": 0.995, "from": 0.499, "to": 0.501, "steps": 9}},
        {"kind": "quadratic_ray", "angle": "2/3", "floor": 1e-150, "ratio": 0.8}
    ]"#,
    )
}

/// Ray of `| 0 1`, an internal arc through the period-1 component crossing
/// the real axis left of -1, and the conjugate ray.
pub fn exponential_line() -> SeparationLine {
    build(
        r#"[
        {"kind": "exponential_ray", "address": "| 0 1", "t_hi": 5, "t_lo": 0.001, "steps": 80},
        {"kind": "internal_p1", "family": "exponential",
         "lambda": {"radius": 0.998, "mid_radius": 0.95, "from": 0.5, "to": -0.5, "steps": 200}},
        {"kind": "exponential_ray", "address": "| 0 -1", "t_hi": 5, "t_lo": 0.001, "steps": 80}
    ]"#,
    )
}

/// The two rays landing at the parabolic parameter `1 + i pi`.
pub fn wake_line() -> SeparationLine {
    build(
        r#"[
        {"kind": "exponential_ray", "address": "| 0 1", "t_hi": 5, "t_lo": 0.001, "steps": 80},
        {"kind": "exponential_ray", "address": "| 1 0", "t_hi": 5, "t_lo": 0.001, "steps": 80}
    ]"#,
    )
}

/// Components of a box minus a rasterized line, by 4-connected flood fill.
pub struct FloodOracle {
    re: (f64, f64),
    im: (f64, f64),
    n: usize,
    /// Component per pixel, `None` where the line passes.
    labels: Vec<Option<u32>>,
}

impl FloodOracle {
    pub fn new(line: &SeparationLine, re: (f64, f64), im: (f64, f64), n: usize) -> Self {
        let mut pts = line.arc.coords();
        let far = 1e7;
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        pts.insert(0, first + line.end_directions[0] * far);
        pts.push(last + line.end_directions[1] * far);
        let mut blocked = vec![false; n * n];
        let to_grid = |c: Complex64| ((c.re - re.0) / (re.1 - re.0) * n as f64, (c.im - im.0) / (im.1 - im.0) * n as f64);
        for w in pts.windows(2) {
            mark_segment(&mut blocked, n, to_grid(w[0]), to_grid(w[1]));
        }
        let mut labels = vec![None; n * n];
        let mut next = 0u32;
        for start in 0..n * n {
            if blocked[start] || labels[start].is_some() {
                continue;
            }
            labels[start] = Some(next);
            let mut queue = VecDeque::from([start]);
            while let Some(k) = queue.pop_front() {
                let (i, j) = (k % n, k / n);
                let mut nb = Vec::with_capacity(4);
                if i > 0 {
                    nb.push(k - 1);
                }
                if i + 1 < n {
                    nb.push(k + 1);
                }
                if j > 0 {
                    nb.push(k - n);
                }
                if j + 1 < n {
                    nb.push(k + n);
                }
                for m in nb {
                    if !blocked[m] && labels[m].is_none() {
                        labels[m] = Some(next);
                        queue.push_back(m);
                    }
                }
            }
            next += 1;
        }
        FloodOracle { re, im, n, labels }
    }

    pub fn label(&self, c: Complex64) -> Option<u32> {
        let i = ((c.re - self.re.0) / (self.re.1 - self.re.0) * self.n as f64).floor();
        let j = ((c.im - self.im.0) / (self.im.1 - self.im.0) * self.n as f64).floor();
        if i < 0.0 || j < 0.0 || i >= self.n as f64 || j >= self.n as f64 {
            return None;
        }
        self.labels[j as usize * self.n + i as usize]
    }

    /// `None` when a query point sits on a pixel the line touches.
    pub fn separates(&self, a: Complex64, b: Complex64) -> Option<bool> {
        Some(self.label(a)? != self.label(b)?)
    }

    pub fn sample(&self, u: f64, v: f64) -> Complex64 {
        Complex64::new(self.re.0 + u * (self.re.1 - self.re.0), self.im.0 + v * (self.im.1 - self.im.0))
    }
}

/// Marks every pixel of `[0, n)^2` the segment passes through.
fn mark_segment(blocked: &mut [bool], n: usize, p: (f64, f64), q: (f64, f64)) {
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    let nf = n as f64;
    // clip the parameter range to the box
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (d, s) in [(dx, p.0), (dy, p.1)] {
        if d == 0.0 {
            if s < 0.0 || s > nf {
                return;
            }
        } else {
            let (a, b) = ((0.0 - s) / d, (nf - s) / d);
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
    }
    if t0 > t1 {
        return;
    }
    let (x0, y0) = (p.0 + t0 * dx, p.1 + t0 * dy);
    let mut ix = (x0.floor() as i64).clamp(0, n as i64 - 1);
    let mut iy = (y0.floor() as i64).clamp(0, n as i64 - 1);
    let sx = if dx > 0.0 { 1 } else { -1 };
    let sy = if dy > 0.0 { 1 } else { -1 };
    let boundary = |i: i64, s: i64| (i + i64::from(s > 0)) as f64;
    let mut tx = if dx != 0.0 { (boundary(ix, sx) - p.0) / dx } else { f64::INFINITY };
    let mut ty = if dy != 0.0 { (boundary(iy, sy) - p.1) / dy } else { f64::INFINITY };
    let (ddx, ddy) = (if dx != 0.0 { 1.0 / dx.abs() } else { f64::INFINITY }, if dy != 0.0 { 1.0 / dy.abs() } else { f64::INFINITY });
    loop {
        if (0..n as i64).contains(&ix) && (0..n as i64).contains(&iy) {
            blocked[iy as usize * n + ix as usize] = true;
        } else {
            break;
        }
        if tx.min(ty) > t1 {
            break;
        }
        if tx < ty {
            ix += sx;
            tx += ddx;
        } else if ty < tx {
            iy += sy;
            ty += ddy;
        } else {
            // through a corner: block both side pixels as well
            for (a, b) in [(ix + sx, iy), (ix, iy + sy)] {
                if (0..n as i64).contains(&a) && (0..n as i64).contains(&b) {
                    blocked[b as usize * n + a as usize] = true;
                }
            }
            ix += sx;
            iy += sy;
            tx += ddx;
            ty += ddy;
        }
    }
}

//! Green's potential, the Böttcher map of the escape locus and parameter
//! rays for `z^d + c`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dynamics::{iterate_with_derivative, orbit, EscapePolicy, Family};
use crate::error::{Error, Result};
use crate::polyline::Polyline;

const NEWTON_STEPS: usize = 60;
/// Newton on `z_n(c) = w^(d^n)` uses the smallest `n` with `d^n h` at least this.
const TARGET_LOG_RADIUS: f64 = 12.0;
const TAIL_EPS: f64 = 1e-15;
/// Smallest potential at which a ray trace may start.
pub const SEED_POTENTIAL: f64 = 2.0;

/// Exact rational angle `num/den` in `[0, 1)` (full turns), kept reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExternalAngle {
    num: u64,
    den: u64,
}

impl ExternalAngle {
    pub fn new(num: i64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidInput("angle denominator is zero".into()));
        }
        let num = num.rem_euclid(den as i64) as u64;
        let g = num.gcd(&den);
        Ok(ExternalAngle { num: num / g, den: den / g })
    }

    pub fn zero() -> Self {
        ExternalAngle { num: 0, den: 1 }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `-angle mod 1`.
    pub fn conj(&self) -> Self {
        ExternalAngle { num: (self.den - self.num) % self.den, den: self.den }
    }

    /// `m * angle mod 1`, exactly.
    pub fn times(&self, m: u64) -> Self {
        let num = ((self.num as u128 * m as u128) % self.den as u128) as u64;
        let g = num.gcd(&self.den);
        ExternalAngle { num: num / g, den: self.den / g }
    }

    /// `d^n * angle mod 1`, exactly.
    pub fn times_pow(&self, d: u64, n: u32) -> Self {
        let q = self.den as u128;
        let mut acc = self.num as u128 % q;
        let mut base = d as u128 % q;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % q;
            }
            base = base * base % q;
            e >>= 1;
        }
        let num = acc as u64;
        let g = num.gcd(&self.den);
        ExternalAngle { num: num / g, den: self.den / g }
    }

    /// `exp(2 pi i angle)`. The residue is taken in `(-den/2, den/2]` so that
    /// conjugate angles give exactly conjugate points; quarter turns are exact.
    pub fn unit(&self) -> Complex64 {
        let (q, mut r) = (self.den as i128, self.num as i128);
        if 2 * r > q {
            r -= q;
        }
        if (4 * r) % q == 0 {
            return match (4 * r / q).rem_euclid(4) {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, -1.0),
            };
        }
        let theta = 2.0 * PI * (r as f64) / (q as f64);
        Complex64::new(theta.cos(), theta.sin())
    }
}

impl fmt::Display for ExternalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for ExternalAngle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |pos: usize, msg: &str| Error::Parse { pos, msg: format!("{msg} in angle `{s}`") };
        match s.split_once('/') {
            Some((p, q)) => {
                let num: i64 = p.trim().parse().map_err(|_| bad(0, "bad numerator"))?;
                let den: u64 = q.trim().parse().map_err(|_| bad(p.len() + 1, "bad denominator"))?;
                if den == 0 {
                    return Err(bad(p.len() + 1, "zero denominator"));
                }
                ExternalAngle::new(num, den)
            }
            None => {
                let num: i64 = s.parse().map_err(|_| bad(0, "expected p/q"))?;
                ExternalAngle::new(num, 1)
            }
        }
    }
}

impl Serialize for ExternalAngle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExternalAngle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A point on a radial line outside the unit disk: `exp(potential + 2 pi i angle)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayTargetQ {
    pub angle: ExternalAngle,
    pub potential: f64,
}

impl RayTargetQ {
    pub fn new(angle: ExternalAngle, potential: f64) -> Result<Self> {
        if !(potential > 0.0 && potential.is_finite()) {
            return Err(Error::InvalidInput(format!("potential must be positive, got {potential}")));
        }
        Ok(RayTargetQ { angle, potential })
    }

    /// Smallest `n` with `d^n * potential >= 12`.
    fn level(&self, d: u32) -> u32 {
        let mut n = 0;
        let mut r = self.potential;
        while r < TARGET_LOG_RADIUS {
            r *= d as f64;
            n += 1;
        }
        n
    }

    /// `(n, w^(d^n))` with the angle reduced exactly before exponentiating.
    fn power_target(&self, d: u32) -> (u32, Complex64) {
        let n = self.level(d);
        let radius = (d as f64).powi(n as i32) * self.potential;
        let u = self.angle.times_pow(d as u64, n).unit();
        (n, u * radius.exp())
    }

    pub fn point(&self) -> Complex64 {
        self.angle.unit() * self.potential.exp()
    }
}

fn degree_of(family: Family) -> Result<u32> {
    family
        .degree()
        .ok_or_else(|| Error::InvalidInput("this operation needs a unicritical family".into()))
}

/// Orbit up to the first escape; errors if `c` does not escape within `n_max`.
fn escaping_orbit(family: Family, c: Complex64, n_max: usize) -> Result<Vec<Complex64>> {
    let rec = orbit(family, c, n_max.max(1), EscapePolicy::Standard)?;
    match rec.escape_step {
        Some(_) => Ok(rec.points),
        None => Err(Error::NotEscaping(c)),
    }
}

/// Escape rate `lim d^-n log|z_n|`, evaluated at the escape step plus the
/// tail `sum_k d^(-k-1) log|1 + c / z_k^d|` until a term drops below 1e-15.
pub fn green_potential(family: Family, c: Complex64, n_max: usize) -> Result<f64> {
    let d = degree_of(family)?;
    let pts = escaping_orbit(family, c, n_max)?;
    let n = pts.len() - 1;
    let mut z = pts[n];
    let mut scale = (d as f64).powi(-(n as i32));
    let mut g = scale * z.norm().ln();
    loop {
        scale /= d as f64;
        let zd = z.powu(d);
        let term = scale * (Complex64::new(1.0, 0.0) + c / zd).norm().ln();
        if !term.is_finite() {
            break;
        }
        g += term;
        if term.abs() < TAIL_EPS || scale == 0.0 {
            break;
        }
        z = zd + c;
    }
    if !(g > 0.0) {
        return Err(Error::NotEscaping(c));
    }
    Ok(g)
}

/// `Phi(c) = c * prod_k (1 + c / z_k^d)^(d^(-k-1))` with principal roots.
pub fn boettcher_phi(family: Family, c: Complex64, n_max: usize) -> Result<Complex64> {
    let d = degree_of(family)?;
    escaping_orbit(family, c, n_max)?;
    let mut z = c;
    let mut scale = 1.0;
    let mut log_phi = c.ln();
    for k in 0.. {
        scale /= d as f64;
        let zd = z.powu(d);
        let u = c / zd;
        let factor = Complex64::new(1.0, 0.0) + u;
        if factor.im == 0.0 && factor.re <= 0.0 {
            return Err(Error::BranchCut { k });
        }
        if !(u.re.is_finite() && u.im.is_finite()) {
            return Err(Error::NotEscaping(c));
        }
        log_phi += factor.ln() * scale;
        if u.norm() * scale < TAIL_EPS {
            break;
        }
        z = zd + c;
    }
    Ok(log_phi.exp())
}

/// Geometric schedule `start, start*ratio, ...` down to `floor`, which is
/// appended when the geometric grid skips it.
pub fn potential_schedule(start: f64, floor: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(floor > 0.0 && start > floor && ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidInput(format!(
            "schedule needs start > floor > 0 and ratio in (0,1), got {start}, {floor}, {ratio}"
        )));
    }
    let mut out = vec![start];
    let mut h = start * ratio;
    while h > floor * (1.0 + 1e-12) {
        out.push(h);
        h *= ratio;
    }
    out.push(floor);
    Ok(out)
}

/// Newton on `z_n(c) = target`. Returns `(c, last |dc|, converged)`.
fn newton_q(family: Family, n: u32, target: Complex64, mut c: Complex64) -> (Complex64, f64, bool) {
    let mut last = f64::INFINITY;
    for _ in 0..NEWTON_STEPS {
        let (z, w) = match iterate_with_derivative(family, c, n as usize) {
            Ok(v) => v,
            Err(_) => return (c, f64::INFINITY, false),
        };
        let dc = (z - target) / w;
        if !(dc.re.is_finite() && dc.im.is_finite()) {
            return (c, f64::INFINITY, false);
        }
        c -= dc;
        last = dc.norm();
        if last <= 1e-14 * c.norm().max(1.0) {
            return (c, last, true);
        }
    }
    (c, last, false)
}

/// Traces the parameter ray of `angle` through the given decreasing
/// potentials. The first point is seeded at `exp(h + 2 pi i angle)` and must
/// have `h >= seed_scale`; a later Newton failure truncates the output.
pub fn trace_ray_q(family: Family, angle: ExternalAngle, potentials: &[f64], seed_scale: f64) -> Result<Polyline> {
    let d = degree_of(family)?;
    if potentials.is_empty() {
        return Err(Error::InvalidInput("empty potential schedule".into()));
    }
    if potentials.iter().any(|h| !(*h > 0.0)) || potentials.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("potentials must be positive and strictly decreasing".into()));
    }
    let first = RayTargetQ::new(angle, potentials[0])?;
    if first.potential < seed_scale {
        return Err(Error::SeedPotentialTooSmall(first.potential));
    }
    let mut line = Polyline::new();
    let mut c = first.point();
    for (i, &h) in potentials.iter().enumerate() {
        let (n, target) = RayTargetQ { angle, potential: h }.power_target(d);
        let (next, residual, ok) = newton_q(family, n, target, c);
        if !ok {
            if i == 0 {
                return Err(Error::SeedPotentialTooSmall(h));
            }
            log::warn!("ray {angle}: Newton failed at potential {h:.3e}; truncating after {i} points");
            break;
        }
        c = next;
        line.push(c, h, residual)?;
    }
    Ok(line)
}

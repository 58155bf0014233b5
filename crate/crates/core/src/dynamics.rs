//! Orbit iteration, parameter derivatives and the escaping / attracting /
//! undecided classification for unicritical polynomials `z^d + c` and
//! exponential maps `e^z + c`.
//!
//! All orbits start at the singular value: `z_0 = c` (the critical value
//! for polynomials, the asymptotic value for exponentials).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which dynamical family a computation runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Family {
    Unicritical { degree: u32 },
    Exponential,
}

impl Family {
    pub const QUADRATIC: Family = Family::Unicritical { degree: 2 };

    pub fn unicritical(degree: u32) -> Result<Family> {
        if degree < 2 {
            return Err(Error::InvalidInput(format!(
                "unicritical degree must be at least 2, got {degree}"
            )));
        }
        Ok(Family::Unicritical { degree })
    }

    pub fn degree(&self) -> Option<u32> {
        match *self {
            Family::Unicritical { degree } => Some(degree),
            Family::Exponential => None,
        }
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, Family::Exponential)
    }

    /// `f_c(z)`.
    #[inline]
    pub fn map(&self, c: Complex64, z: Complex64) -> Complex64 {
        match *self {
            Family::Unicritical { degree: 2 } => z * z + c,
            Family::Unicritical { degree } => z.powu(degree) + c,
            Family::Exponential => z.exp() + c,
        }
    }

    /// `f_c'(z)`, the derivative in the dynamical variable.
    #[inline]
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        match *self {
            Family::Unicritical { degree: 2 } => z * 2.0,
            Family::Unicritical { degree } => z.powu(degree - 1) * degree as f64,
            Family::Exponential => z.exp(),
        }
    }

    /// Product of `f'` over the given orbit points. For the exponential
    /// family this is `exp(sum z_i)`, which stays finite on cycles that
    /// pass through astronomically large and small values.
    pub fn derivative_product(&self, points: &[Complex64]) -> Complex64 {
        match self {
            Family::Exponential => points.iter().sum::<Complex64>().exp(),
            _ => points
                .iter()
                .fold(Complex64::new(1.0, 0.0), |acc, &z| acc * self.derivative(z)),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Family::Unicritical { degree: 2 } => "quadratic".to_string(),
            Family::Unicritical { degree } => format!("unicritical-{degree}"),
            Family::Exponential => "exponential".to_string(),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    /// `quadratic`, `exponential` or `unicritical-<d>`.
    fn from_str(s: &str) -> Result<Family> {
        match s.trim() {
            "quadratic" => Ok(Family::QUADRATIC),
            "exponential" => Ok(Family::Exponential),
            other => match other.strip_prefix("unicritical-").map(str::parse::<u32>) {
                Some(Ok(d)) => Family::unicritical(d),
                _ => Err(Error::InvalidInput(format!("unknown family {other:?}"))),
            },
        }
    }
}

impl TryFrom<String> for Family {
    type Error = Error;
    fn try_from(s: String) -> Result<Family> {
        s.parse()
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.name()
    }
}

/// How escape is decided while iterating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum EscapePolicy {
    /// Unicritical: `|z| > max(2^(1/(d-1)), |c|)`.
    /// Exponential: `Re z > 50` with `cos(Im z) > 0`, or `Re z > 700`.
    #[default]
    Standard,
    /// Replace the standard radius (unicritical) or real-part threshold
    /// (exponential) by the given value.
    Threshold(f64),
    /// Only non-finite values count as escape.
    OverflowOnly,
}

/// Real part beyond which `exp` is about to leave binary64.
pub const EXP_OVERFLOW_GUARD: f64 = 700.0;
/// Default exponential escape threshold on `Re z`.
pub const EXP_ESCAPE_REAL: f64 = 50.0;

#[derive(Debug, Clone, Copy)]
pub(crate) enum EscapeTest {
    Radius(f64),
    RealPart(f64),
    Overflow,
}

impl EscapeTest {
    pub(crate) fn new(family: Family, c: Complex64, policy: EscapePolicy) -> Self {
        match (family, policy) {
            (_, EscapePolicy::OverflowOnly) => EscapeTest::Overflow,
            (Family::Unicritical { degree }, EscapePolicy::Standard) => {
                let r = 2f64.powf(1.0 / (degree as f64 - 1.0));
                EscapeTest::Radius(r.max(c.norm()))
            }
            (Family::Unicritical { .. }, EscapePolicy::Threshold(r)) => EscapeTest::Radius(r),
            (Family::Exponential, EscapePolicy::Standard) => EscapeTest::RealPart(EXP_ESCAPE_REAL),
            (Family::Exponential, EscapePolicy::Threshold(x)) => EscapeTest::RealPart(x),
        }
    }

    #[inline]
    pub(crate) fn escaped(&self, z: Complex64) -> bool {
        if !z.re.is_finite() || !z.im.is_finite() {
            return true;
        }
        match *self {
            EscapeTest::Radius(r) => z.norm_sqr() > r * r,
            EscapeTest::RealPart(x) => {
                z.re > EXP_OVERFLOW_GUARD || (z.re > x && z.im.cos() > 0.0)
            }
            EscapeTest::Overflow => false,
        }
    }
}

/// The singular orbit together with its parameter derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRecord {
    /// `z_0 = c, z_1 = f_c(c), ...`
    pub points: Vec<Complex64>,
    /// `w_k = d/dc z_k`, with `w_0 = 1`.
    pub param_derivs: Vec<Complex64>,
    /// First index whose point satisfies the escape predicate.
    pub escape_step: Option<usize>,
    /// Index of the last point computed.
    pub truncated_at: usize,
}

/// Iterates `n_max` steps from `z_0 = c`, stopping at the first escaping
/// point (which is kept in the record).
pub fn orbit(family: Family, c: Complex64, n_max: usize, escape: EscapePolicy) -> Result<OrbitRecord> {
    if n_max < 1 {
        return Err(Error::InvalidInput("orbit needs n_max >= 1".into()));
    }
    let test = EscapeTest::new(family, c, escape);
    let mut points = Vec::with_capacity(n_max.min(4096) + 1);
    let mut derivs = Vec::with_capacity(n_max.min(4096) + 1);
    let mut z = c;
    let mut w = Complex64::new(1.0, 0.0);
    let mut escape_step = None;
    for k in 0..=n_max {
        points.push(z);
        derivs.push(w);
        if test.escaped(z) {
            escape_step = Some(k);
            break;
        }
        if k == n_max {
            break;
        }
        w = family.derivative(z) * w + 1.0;
        z = family.map(c, z);
    }
    let truncated_at = points.len() - 1;
    Ok(OrbitRecord {
        points,
        param_derivs: derivs,
        escape_step,
        truncated_at,
    })
}

/// `w_n = d/dc f_c^n(c)`. Only overflow stops the recurrence, so this is
/// defined along escaping orbits as long as they stay representable.
pub fn param_derivative(family: Family, c: Complex64, n: usize) -> Result<Complex64> {
    let (_, w) = iterate_with_derivative(family, c, n)?;
    Ok(w)
}

/// `(z_n, w_n)` without materialising the orbit.
pub fn iterate_with_derivative(family: Family, c: Complex64, n: usize) -> Result<(Complex64, Complex64)> {
    let mut z = c;
    let mut w = Complex64::new(1.0, 0.0);
    for k in 0..n {
        w = family.derivative(z) * w + 1.0;
        z = family.map(c, z);
        if !(z.re.is_finite() && z.im.is_finite() && w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::DerivativePastEscape {
                escaped_at: k + 1,
                requested: n,
            });
        }
    }
    Ok((z, w))
}

/// The verdict for one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Classification {
    Escaping {
        step: usize,
    },
    Attracting {
        period: usize,
        multiplier: Complex64,
        cycle: Vec<Complex64>,
    },
    Undecided,
}

impl Classification {
    pub fn period(&self) -> Option<usize> {
        match self {
            Classification::Attracting { period, .. } => Some(*period),
            _ => None,
        }
    }

    pub fn multiplier(&self) -> Option<Complex64> {
        match self {
            Classification::Attracting { multiplier, .. } => Some(*multiplier),
            _ => None,
        }
    }

    pub fn escape_step(&self) -> Option<usize> {
        match self {
            Classification::Escaping { step } => Some(*step),
            _ => None,
        }
    }

    pub fn is_attracting(&self) -> bool {
        matches!(self, Classification::Attracting { .. })
    }

    pub fn is_escaping(&self) -> bool {
        matches!(self, Classification::Escaping { .. })
    }

    /// Short tag used in CSV and JSON outputs.
    pub fn tag(&self) -> &'static str {
        match self {
            Classification::Escaping { .. } => "escaping",
            Classification::Attracting { .. } => "attracting",
            Classification::Undecided => "undecided",
        }
    }

    /// Human-readable summary, e.g. `attracting(3)`.
    pub fn summary(&self) -> String {
        match self {
            Classification::Escaping { step } => format!("escaping({step})"),
            Classification::Attracting { period, .. } => format!("attracting({period})"),
            Classification::Undecided => "undecided".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub n_max: usize,
    pub burn_in: usize,
    pub p_max: usize,
    pub cycle_tol: f64,
    pub escape: EscapePolicy,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            n_max: 5000,
            burn_in: 1000,
            p_max: 256,
            cycle_tol: 1e-9,
            escape: EscapePolicy::Standard,
        }
    }
}

const POLISH_STEPS: usize = 12;

/// Classifies `c` as escaping, attracting (with minimal period, multiplier
/// and polished cycle) or undecided.
///
/// After `burn_in` steps the orbit is scanned in windows of `p_max` steps
/// for a near return `|z_{k+p} - z_k| < cycle_tol * max(1, |z_k|)`; a hit is
/// polished by a multiple-shooting Newton solve of the cycle equations and
/// accepted only if the cycle closes and its multiplier has modulus < 1.
/// The scan continues until `n_max`.
pub fn classify(family: Family, c: Complex64, opts: &ClassifyOptions) -> Classification {
    let test = EscapeTest::new(family, c, opts.escape);
    let mut z = c;
    let mut step = 0usize;
    let burn_in = opts.burn_in.min(opts.n_max);
    while step < burn_in {
        if test.escaped(z) {
            return Classification::Escaping { step };
        }
        z = family.map(c, z);
        step += 1;
    }
    let p_max = opts.p_max.max(1);
    let mut window = Vec::with_capacity(p_max + 1);
    loop {
        if test.escaped(z) {
            return Classification::Escaping { step };
        }
        if step >= opts.n_max {
            return Classification::Undecided;
        }
        let reference = z;
        let scale = opts.cycle_tol * reference.norm().max(1.0);
        window.clear();
        window.push(z);
        let mut found = None;
        for p in 1..=p_max {
            z = family.map(c, z);
            step += 1;
            if test.escaped(z) {
                return Classification::Escaping { step };
            }
            if (z - reference).norm() < scale {
                found = Some(p);
                break;
            }
            window.push(z);
            if step >= opts.n_max {
                break;
            }
        }
        if let Some(p) = found {
            if let Some(verdict) = confirm_cycle(family, c, &window[..p], opts) {
                return verdict;
            }
        }
    }
}

fn confirm_cycle(
    family: Family,
    c: Complex64,
    approx: &[Complex64],
    opts: &ClassifyOptions,
) -> Option<Classification> {
    let mut cycle = approx.to_vec();
    if family.is_exponential() {
        // Keep the most negative point last so that every suffix product
        // in the Newton solve contains its tiny derivative factor.
        let (imin, _) = cycle
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.re.total_cmp(&b.1.re))
            .map(|(i, z)| (i, *z))?;
        let len = cycle.len();
        cycle.rotate_left((imin + 1) % len);
    }
    polish_cycle(family, c, &mut cycle);

    let p = cycle.len();
    let close = |a: Complex64, b: Complex64, tol: f64| (a - b).norm() < tol * b.norm().max(1.0);
    for q in (1..p).filter(|q| p % q == 0) {
        if (0..p - q).all(|i| close(cycle[i + q], cycle[i], 10.0 * opts.cycle_tol)) {
            cycle.truncate(q);
            polish_cycle(family, c, &mut cycle);
            break;
        }
    }

    let p = cycle.len();
    for i in 0..p {
        if !close(family.map(c, cycle[i]), cycle[(i + 1) % p], 10.0 * opts.cycle_tol) {
            return None;
        }
    }
    let multiplier = family.derivative_product(&cycle);
    if !(multiplier.norm() < 1.0) {
        return None;
    }
    Some(Classification::Attracting {
        period: p,
        multiplier,
        cycle,
    })
}

/// Multiple-shooting Newton on `f(zeta_i) = zeta_{i+1 mod p}`. The cyclic
/// bidiagonal system is solved in closed form; returns whether the
/// iteration converged. On divergence the input cycle is left untouched.
pub(crate) fn polish_cycle(family: Family, c: Complex64, cycle: &mut [Complex64]) -> bool {
    let p = cycle.len();
    if p == 0 {
        return false;
    }
    let mut work = cycle.to_vec();
    let mut residual = vec![Complex64::new(0.0, 0.0); p];
    let mut suffix = vec![Complex64::new(0.0, 0.0); p];
    let mut delta = vec![Complex64::new(0.0, 0.0); p];
    for _ in 0..POLISH_STEPS {
        for i in 0..p {
            residual[i] = family.map(c, work[i]) - work[(i + 1) % p];
        }
        // suffix[k] = prod_{j=k+1}^{p-1} f'(zeta_j)
        suffix[p - 1] = Complex64::new(1.0, 0.0);
        if family.is_exponential() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in (0..p - 1).rev() {
                acc += work[k + 1];
                suffix[k] = acc.exp();
            }
        } else {
            for k in (0..p - 1).rev() {
                suffix[k] = suffix[k + 1] * family.derivative(work[k + 1]);
            }
        }
        let lambda = family.derivative_product(&work);
        let s: Complex64 = (0..p).map(|k| suffix[k] * residual[k]).sum();
        delta[0] = s / (Complex64::new(1.0, 0.0) - lambda);
        for i in 0..p - 1 {
            delta[i + 1] = family.derivative(work[i]) * delta[i] + residual[i];
        }
        let mut worst = 0.0f64;
        for i in 0..p {
            work[i] += delta[i];
            worst = worst.max(delta[i].norm() / work[i].norm().max(1.0));
        }
        if work.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return false;
        }
        if worst < 1e-15 {
            cycle.copy_from_slice(&work);
            return true;
        }
    }
    cycle.copy_from_slice(&work);
    false
}

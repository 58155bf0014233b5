use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyPoint {
    pub c: Complex64,
    /// Curve parameter (potential, ray parameter or arc index).
    pub t: f64,
    pub residual: f64,
}

/// Ordered list of parameter points with strictly monotone `t`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    points: Vec<PolyPoint>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    t: f64,
    re: f64,
    im: f64,
    residual: f64,
}

impl Polyline {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_points(points: Vec<PolyPoint>) -> Result<Self> {
        let mut p = Polyline::new();
        for q in points {
            p.push(q.c, q.t, q.residual)?;
        }
        Ok(p)
    }

    /// Points with `t` set to their index.
    pub fn from_complex(cs: &[Complex64]) -> Self {
        Polyline {
            points: cs
                .iter()
                .enumerate()
                .map(|(i, &c)| PolyPoint { c, t: i as f64, residual: 0.0 })
                .collect(),
        }
    }

    pub fn push(&mut self, c: Complex64, t: f64, residual: f64) -> Result<()> {
        if !(residual >= 0.0) || !t.is_finite() || !c.re.is_finite() || !c.im.is_finite() {
            return Err(Error::InvalidInput(format!(
                "polyline point needs finite c, t and residual >= 0 (c={c}, t={t}, residual={residual})"
            )));
        }
        if self.points.len() >= 2 {
            let [a, b] = [self.points[self.points.len() - 2].t, self.points[self.points.len() - 1].t];
            if (b > a) != (t > b) || t == b {
                return Err(Error::InvalidInput(format!("t must be strictly monotone, got {t} after {b}")));
            }
        } else if let Some(last) = self.points.last() {
            if t == last.t {
                return Err(Error::InvalidInput(format!("t repeats at {t}")));
            }
        }
        self.points.push(PolyPoint { c, t, residual });
        Ok(())
    }

    pub fn points(&self) -> &[PolyPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Option<&PolyPoint> {
        self.points.first()
    }

    pub fn last(&self) -> Option<&PolyPoint> {
        self.points.last()
    }

    pub fn coords(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.c).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.points.iter().map(|p| p.residual).fold(0.0, f64::max)
    }

    /// Same points in the opposite order.
    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Polyline { points }
    }

    /// Conjugate every point.
    pub fn conj(&self) -> Self {
        Polyline {
            points: self.points.iter().map(|p| PolyPoint { c: p.c.conj(), ..*p }).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for p in &self.points {
            wr.serialize(CsvRow { t: p.t, re: p.c.re, im: p.c.im, residual: p.residual })?;
        }
        if self.points.is_empty() {
            wr.write_record(["t", "re", "im", "residual"])?;
        }
        wr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut p = Polyline::new();
        for row in rd.deserialize() {
            let row: CsvRow = row?;
            p.push(Complex64::new(row.re, row.im), row.t, row.residual)?;
        }
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

/// Centroid and diameter of the last `tail_fraction` of the points.
pub fn land_estimate(p: &Polyline, tail_fraction: f64) -> Result<(Complex64, f64)> {
    if p.is_empty() {
        return Err(Error::InvalidInput("empty polyline".into()));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!("tail fraction {tail_fraction} outside (0, 1]")));
    }
    let n = p.len();
    let k = ((n as f64 * tail_fraction).ceil() as usize).clamp(1, n);
    let tail = &p.points[n - k..];
    let centroid = tail.iter().map(|q| q.c).sum::<Complex64>() / k as f64;
    let mut diam = 0.0f64;
    for (i, a) in tail.iter().enumerate() {
        for b in &tail[i + 1..] {
            diam = diam.max((a.c - b.c).norm());
        }
    }
    Ok((centroid, diam))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_t_is_enforced() {
        let mut p = Polyline::new();
        p.push(Complex64::new(0.0, 0.0), 3.0, 0.0).unwrap();
        p.push(Complex64::new(0.0, 0.0), 2.0, 0.0).unwrap();
        assert!(p.push(Complex64::new(0.0, 0.0), 2.5, 0.0).is_err());
        assert!(p.push(Complex64::new(0.0, 0.0), 1.0, -1.0).is_err());
        p.push(Complex64::new(0.0, 0.0), 1.0, 0.0).unwrap();
    }

    #[test]
    fn land_estimate_examples() {
        let c = Polyline::from_complex(&[Complex64::new(1.0, 1.0); 4]);
        assert_eq!(land_estimate(&c, 0.5).unwrap(), (Complex64::new(1.0, 1.0), 0.0));
        let two = Polyline::from_complex(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert_eq!(land_estimate(&two, 1.0).unwrap(), (Complex64::new(0.5, 0.0), 1.0));
        assert!(land_estimate(&two, 0.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut p = Polyline::new();
        p.push(Complex64::new(0.1, -0.2), 8.0, 1e-13).unwrap();
        p.push(Complex64::new(0.3, 1.0 / 3.0), 7.2, 0.0).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,re,im,residual\n"));
        assert_eq!(Polyline::read_csv(buf.as_slice()).unwrap(), p);
    }
}

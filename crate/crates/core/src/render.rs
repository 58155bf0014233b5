//! Raster classification of parameter windows and PPM output.
//!
//! Painting: undecided cells black, escaping cells white (or banded gray by
//! escape time), attracting cells white when their component reaches the
//! window edge and gray otherwise. Boundedness is judged at window scale.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{classify, Classification, ClassifyOptions, Family};
use crate::error::{Error, Result};

const ASPECT_TOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub width: usize,
    pub height: usize,
}

impl Window {
    /// Validates ranges and a square pixel aspect (within 1%).
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64, width: usize, height: usize) -> Result<Window> {
        if ![re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()) || re_min >= re_max || im_min >= im_max {
            return Err(Error::InvalidInput(format!(
                "window needs re_min < re_max and im_min < im_max, got [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("window needs at least one pixel in each direction".into()));
        }
        let w = Window { re_min, re_max, im_min, im_max, width, height };
        let ratio = w.dx() / w.dy();
        if (ratio - 1.0).abs() > ASPECT_TOL {
            return Err(Error::InvalidInput(format!(
                "pixels are not square: {:.4e} by {:.4e} (height {} would fit)",
                w.dx(),
                w.dy(),
                Window::fitted_height(re_min, re_max, im_min, im_max, width)
            )));
        }
        Ok(w)
    }

    fn fitted_height(re_min: f64, re_max: f64, im_min: f64, im_max: f64, width: usize) -> usize {
        (((im_max - im_min) / (re_max - re_min) * width as f64).round() as usize).max(1)
    }

    /// Height derived from the width.
    pub fn with_width(re_min: f64, re_max: f64, im_min: f64, im_max: f64, width: usize) -> Result<Window> {
        if width == 0 || !(re_max > re_min) || !(im_max > im_min) {
            return Window::new(re_min, re_max, im_min, im_max, width, 1);
        }
        let height = Window::fitted_height(re_min, re_max, im_min, im_max, width);
        Window::new(re_min, re_max, im_min, im_max, width, height)
    }

    pub fn quadratic_default(width: usize) -> Result<Window> {
        Window::with_width(-2.25, 0.75, -1.5, 1.5, width)
    }

    pub fn exponential_default(width: usize) -> Result<Window> {
        Window::with_width(-6.0, 4.0, -15.0, 15.0, width)
    }

    pub fn dx(&self) -> f64 {
        (self.re_max - self.re_min) / self.width as f64
    }

    pub fn dy(&self) -> f64 {
        (self.im_max - self.im_min) / self.height as f64
    }

    /// Center of pixel column `i`, row `j` (row 0 at the top). Each half is
    /// measured from its own edge so that windows symmetric about the real
    /// axis get exactly conjugate rows.
    pub fn pixel_center(&self, i: usize, j: usize) -> Complex64 {
        let re = self.re_min + (i as f64 + 0.5) * self.dx();
        let im = if 2 * j < self.height {
            self.im_max - (j as f64 + 0.5) * self.dy()
        } else {
            self.im_min + ((self.height - 1 - j) as f64 + 0.5) * self.dy()
        };
        Complex64::new(re, im)
    }

    /// Continuous pixel coordinates, (0, 0) at the top left corner.
    pub fn to_pixel(&self, c: Complex64) -> (f64, f64) {
        ((c.re - self.re_min) / self.dx(), (self.im_max - c.im) / self.dy())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassGrid {
    pub window: Window,
    pub family: Family,
    /// Row-major, row 0 at the top.
    pub cells: Vec<Classification>,
    /// Attracting cells whose component (same period, 4-connected) stays
    /// off the window edge.
    pub bounded: Vec<bool>,
}

impl ClassGrid {
    pub fn cell(&self, i: usize, j: usize) -> &Classification {
        &self.cells[j * self.window.width + i]
    }

    pub fn is_bounded(&self, i: usize, j: usize) -> bool {
        self.bounded[j * self.window.width + i]
    }

    /// Rows `i, j, verdict, period, escape_step`; empty fields where the
    /// verdict has no such value.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["i", "j", "verdict", "period", "escape_step"])?;
        for j in 0..self.window.height {
            for i in 0..self.window.width {
                let cell = self.cell(i, j);
                let period = cell.period().map(|p| p.to_string()).unwrap_or_default();
                let step = cell.escape_step().map(|s| s.to_string()).unwrap_or_default();
                wr.write_record([i.to_string(), j.to_string(), cell.tag().to_string(), period, step])?;
            }
        }
        wr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Classifies every pixel center. Rows run in parallel; the result does not
/// depend on scheduling.
pub fn classify_grid(family: Family, window: &Window, opts: &ClassifyOptions) -> ClassGrid {
    let w = window.width;
    let cells: Vec<Classification> = (0..window.height)
        .into_par_iter()
        .flat_map_iter(|j| (0..w).map(move |i| classify(family, window.pixel_center(i, j), opts)))
        .collect();
    let bounded = bounded_flags(&cells, w, window.height);
    ClassGrid { window: *window, family, cells, bounded }
}

fn bounded_flags(cells: &[Classification], w: usize, h: usize) -> Vec<bool> {
    let period = |k: usize| match &cells[k] {
        Classification::Attracting { period, .. } => Some(*period),
        _ => None,
    };
    let mut label = vec![usize::MAX; cells.len()];
    let mut bounded = vec![false; cells.len()];
    let mut stack = Vec::new();
    let mut members = Vec::new();
    for start in 0..cells.len() {
        let Some(p) = period(start) else { continue };
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = start;
        stack.push(start);
        members.clear();
        let mut touches_edge = false;
        while let Some(k) = stack.pop() {
            members.push(k);
            let (i, j) = (k % w, k / w);
            if i == 0 || j == 0 || i + 1 == w || j + 1 == h {
                touches_edge = true;
            }
            let mut visit = |n: usize| {
                if label[n] == usize::MAX && period(n) == Some(p) {
                    label[n] = start;
                    stack.push(n);
                }
            };
            if i > 0 {
                visit(k - 1);
            }
            if i + 1 < w {
                visit(k + 1);
            }
            if j > 0 {
                visit(k - w);
            }
            if j + 1 < h {
                visit(k + w);
            }
        }
        for &k in &members {
            bounded[k] = !touches_edge;
        }
    }
    bounded
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PaletteSpec {
    /// Paint escaping cells in this many gray bands by escape step instead
    /// of plain white.
    pub escape_bands: Option<u32>,
}

pub const BLACK: [u8; 3] = [0, 0, 0];
pub const WHITE: [u8; 3] = [255, 255, 255];
pub const GRAY: [u8; 3] = [128, 128, 128];

impl PaletteSpec {
    pub fn color(&self, cell: &Classification, bounded: bool) -> [u8; 3] {
        match cell {
            Classification::Undecided => BLACK,
            Classification::Attracting { .. } if bounded => GRAY,
            Classification::Attracting { .. } => WHITE,
            Classification::Escaping { step } => match self.escape_bands {
                Some(bands) if bands >= 2 => {
                    let band = (*step % bands as usize) as u32;
                    let v = 160 + 95 * band / (bands - 1);
                    [v as u8; 3]
                }
                _ => WHITE,
            },
        }
    }
}

/// 8-bit RGB raster, row 0 at the top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Image {
    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Image {
        Image { width, height, data: color.repeat(width * height) }
    }

    pub fn pixel(&self, i: usize, j: usize) -> [u8; 3] {
        let k = 3 * (j * self.width + i);
        [self.data[k], self.data[k + 1], self.data[k + 2]]
    }

    pub fn set(&mut self, i: usize, j: usize, color: [u8; 3]) {
        let k = 3 * (j * self.width + i);
        self.data[k..k + 3].copy_from_slice(&color);
    }

    /// Binary PPM (P6, maxval 255).
    pub fn encode_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn save_ppm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode_ppm()).map_err(|e| Error::io(path, e))
    }
}

pub fn paint(grid: &ClassGrid, palette: &PaletteSpec) -> Image {
    let (w, h) = (grid.window.width, grid.window.height);
    let mut img = Image::filled(w, h, BLACK);
    for (k, cell) in grid.cells.iter().enumerate() {
        img.set(k % w, k / w, palette.color(cell, grid.bounded[k]));
    }
    img
}

pub fn write_image(grid: &ClassGrid, palette: &PaletteSpec, path: &Path) -> Result<()> {
    paint(grid, palette).save_ppm(path)
}

/// Clips the segment to `[0, w] x [0, h]` (Liang-Barsky).
fn clip(p: (f64, f64), q: (f64, f64), w: f64, h: f64) -> Option<((f64, f64), (f64, f64))> {
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for (den, num) in [(-dx, p.0), (dx, w - p.0), (-dy, p.1), (dy, h - p.1)] {
        if den == 0.0 {
            if num < 0.0 {
                return None;
            }
        } else {
            let r = num / den;
            if den < 0.0 {
                lo = lo.max(r);
            } else {
                hi = hi.min(r);
            }
        }
    }
    (lo <= hi).then(|| ((p.0 + lo * dx, p.1 + lo * dy), (p.0 + hi * dx, p.1 + hi * dy)))
}

fn bresenham(img: &mut Image, a: (i64, i64), b: (i64, i64), color: [u8; 3]) {
    let (mut x, mut y) = a;
    let dx = (b.0 - x).abs();
    let dy = -(b.1 - y).abs();
    let sx = if x < b.0 { 1 } else { -1 };
    let sy = if y < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        if x >= 0 && y >= 0 && (x as usize) < img.width && (y as usize) < img.height {
            img.set(x as usize, y as usize, color);
        }
        if x == b.0 && y == b.1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Draws each polyline in its color (cycling through `colors`). Parts
/// outside the window are clipped.
pub fn overlay_polylines(img: &mut Image, window: &Window, polylines: &[Vec<Complex64>], colors: &[[u8; 3]]) {
    if colors.is_empty() {
        return;
    }
    let (w, h) = (img.width as f64, img.height as f64);
    let cell = |v: f64, n: usize| (v.floor() as i64).clamp(0, n as i64 - 1);
    for (k, line) in polylines.iter().enumerate() {
        let color = colors[k % colors.len()];
        if line.len() == 1 {
            let (x, y) = window.to_pixel(line[0]);
            if (0.0..w).contains(&x) && (0.0..h).contains(&y) {
                img.set(x as usize, y as usize, color);
            }
        }
        for seg in line.windows(2) {
            let (p, q) = (window.to_pixel(seg[0]), window.to_pixel(seg[1]));
            if !(p.0.is_finite() && p.1.is_finite() && q.0.is_finite() && q.1.is_finite()) {
                continue;
            }
            if let Some((p, q)) = clip(p, q, w, h) {
                bresenham(
                    img,
                    (cell(p.0, img.width), cell(p.1, img.height)),
                    (cell(q.0, img.width), cell(q.1, img.height)),
                    color,
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_validation() {
        assert!(Window::new(0.0, 1.0, 0.0, 1.0, 10, 10).is_ok());
        assert!(Window::new(0.0, 1.0, 0.0, 1.0, 10, 12).is_err());
        assert!(Window::new(1.0, 0.0, 0.0, 1.0, 10, 10).is_err());
        assert!(Window::new(0.0, 1.0, 0.0, 1.0, 0, 0).is_err());
        assert_eq!(Window::exponential_default(100).unwrap().height, 300);
    }

    #[test]
    fn mirrored_rows_are_conjugate() {
        let w = Window::with_width(-2.0, 1.0, -1.3, 1.3, 37).unwrap();
        for j in 0..w.height {
            for i in [0, 5, 36] {
                assert_eq!(w.pixel_center(i, j), w.pixel_center(i, w.height - 1 - j).conj());
            }
        }
    }

    #[test]
    fn single_cell_grid() {
        let w = Window::new(-0.1, 0.1, -0.1, 0.1, 1, 1).unwrap();
        let g = classify_grid(Family::QUADRATIC, &w, &ClassifyOptions::default());
        assert_eq!(g.cells.len(), 1);
        assert_eq!(g.cells[0].period(), Some(1));
        assert!(!g.bounded[0]);
    }

    #[test]
    fn palette_bytes() {
        let w = Window::new(0.0, 1.0, 0.0, 1.0, 1, 1).unwrap();
        let g = ClassGrid { window: w, family: Family::QUADRATIC, cells: vec![Classification::Undecided], bounded: vec![false] };
        assert_eq!(paint(&g, &PaletteSpec::default()).encode_ppm(), b"P6\n1 1\n255\n\0\0\0".to_vec());
        let attracting = Classification::Attracting { period: 1, multiplier: Complex64::new(0.0, 0.0), cycle: vec![] };
        let w2 = Window::new(0.0, 2.0, 0.0, 1.0, 2, 1).unwrap();
        let g2 = ClassGrid {
            window: w2,
            family: Family::QUADRATIC,
            cells: vec![Classification::Escaping { step: 1 }, attracting],
            bounded: vec![false, true],
        };
        assert_eq!(paint(&g2, &PaletteSpec::default()).data, vec![255, 255, 255, 128, 128, 128]);
    }

    #[test]
    fn bounded_labeling() {
        // a 3x3 block with one attracting center cell and an attracting edge cell
        let a = |p| Classification::Attracting { period: p, multiplier: Complex64::new(0.0, 0.0), cycle: vec![] };
        let e = Classification::Escaping { step: 1 };
        let cells = vec![e.clone(), e.clone(), e.clone(), e.clone(), a(2), a(1), e.clone(), e.clone(), e];
        assert_eq!(bounded_flags(&cells, 3, 3), vec![false, false, false, false, true, false, false, false, false]);
    }

    #[test]
    fn overlay_draws_one_row() {
        let w = Window::new(0.0, 10.0, 0.0, 10.0, 10, 10).unwrap();
        let base = Image::filled(10, 10, WHITE);
        let mut img = base.clone();
        overlay_polylines(&mut img, &w, &[], &[BLACK]);
        assert_eq!(img, base);
        overlay_polylines(&mut img, &w, &[vec![Complex64::new(-5.0, 3.5), Complex64::new(20.0, 3.5)]], &[BLACK]);
        let rows: Vec<usize> = (0..10).filter(|&j| (0..10).any(|i| img.pixel(i, j) == BLACK)).collect();
        assert_eq!(rows, vec![6]);
        assert!((0..10).all(|i| img.pixel(i, 6) == BLACK));
    }
}

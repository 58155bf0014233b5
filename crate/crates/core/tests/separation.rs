mod common;

use common::FloodOracle;
use param_atlas::separation::{fiber_probe, SeparationLine};
use param_atlas::{Complex64, Error, Family};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn agreement(line: &SeparationLine, re: (f64, f64), im: (f64, f64), seed: u64) -> f64 {
    let oracle = FloodOracle::new(line, re, im, 64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut agree, mut total) = (0, 0);
    while total < 1000 {
        let a = oracle.sample(rng.gen(), rng.gen());
        let b = oracle.sample(rng.gen(), rng.gen());
        let Some(expected) = oracle.separates(a, b) else { continue };
        match line.separates(a, b) {
            Ok(v) => {
                total += 1;
                agree += usize::from(v == expected);
            }
            Err(Error::DegenerateQuery(_)) => continue,
            Err(e) => panic!("{e}"),
        }
    }
    agree as f64 / total as f64
}

#[test]
fn limb_line_cuts_off_the_half_limb() {
    let line = common::limb_line();
    assert!(line.warnings.is_empty(), "{:?}", line.warnings);
    assert!(line.separates(c(-1.0, 0.0), c(0.0, 0.0)).unwrap());
    assert!(line.separates(c(-1.0, 0.0), c(0.25, 0.0)).unwrap());
    assert!(!line.separates(c(-1.0, 0.0), c(-2.0, 0.0)).unwrap());
    assert!(!line.separates(c(0.0, 0.0), c(0.0, 1.0)).unwrap());
    assert!(agreement(&line, (-2.5, 1.0), (-1.75, 1.75), 1) >= 0.99);
}

#[test]
fn exponential_line_splits_the_real_axis() {
    let line = common::exponential_line();
    assert!(line.warnings.is_empty(), "{:?}", line.warnings);
    assert!(line.separates(c(-3.0, 0.0), c(3.0, 0.0)).unwrap());
    assert!(!line.separates(c(-3.0, 0.0), c(-3.0, 5.0)).unwrap());
    assert!(agreement(&line, (-4.0, 6.0), (-5.0, 5.0), 2) >= 0.99);
}

#[test]
fn wake_line_encloses_the_period_two_wake() {
    let line = common::wake_line();
    assert!(line.separates(c(3.0, 3.0), c(-3.0, 0.0)).unwrap());
    assert!(!line.separates(c(-3.0, 0.0), c(3.0, 0.0)).unwrap());
    assert!(agreement(&line, (-4.0, 6.0), (-2.0, 8.0), 3) >= 0.99);
}

#[test]
fn fiber_probe_against_the_limb_line() {
    let line = common::limb_line();
    let r = fiber_probe(Family::QUADRATIC, c(-1.0, 0.0), &[c(-1.1, 0.0), c(-0.3, 0.0), c(-1.8, 0.0)], &[line]).unwrap();
    assert_eq!(r.separated_from_base, vec![false, true, false]);
    assert_eq!(r.verdicts, vec!["attracting", "attracting", "undecided"]);
}

#[test]
fn lines_survive_a_save_load_cycle() {
    let line = common::wake_line();
    let dir = tempfile::tempdir().unwrap();
    let (csv, json) = (dir.path().join("w.csv"), dir.path().join("w.json"));
    line.save(&csv, &json).unwrap();
    let back = SeparationLine::load(&csv, &json).unwrap();
    assert_eq!(back.arc.coords(), line.arc.coords());
    assert_eq!(back.end_directions, line.end_directions);
    assert_eq!(back.separates(c(3.0, 3.0), c(-3.0, 0.0)).unwrap(), true);
}

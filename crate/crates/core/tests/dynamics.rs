use param_atlas::dynamics::iterate_with_derivative;
use param_atlas::{classify, orbit, param_derivative, Classification, ClassifyOptions, EscapePolicy, Family};
use param_atlas::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn zn(f: Family, c: Complex64, n: usize) -> Complex64 {
    let mut z = c;
    for _ in 0..n {
        z = f.map(c, z);
    }
    z
}

/// Richardson-extrapolated central difference of `c -> z_n(c)`.
fn fd_derivative(f: Family, c: Complex64, n: usize, h: f64) -> Complex64 {
    let d = |h: f64| (zn(f, c + h, n) - zn(f, c - h, n)) / (2.0 * h);
    (d(h / 2.0) * 4.0 - d(h)) / 3.0
}

#[test]
fn derivative_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 400 {
        let family = match rng.gen_range(0..4) {
            0 | 1 => Family::QUADRATIC,
            2 => Family::unicritical(3).unwrap(),
            _ => Family::Exponential,
        };
        let c = if family.is_exponential() {
            Complex64::new(rng.gen_range(-4.0..2.0), rng.gen_range(-4.0..4.0))
        } else {
            Complex64::new(rng.gen_range(-2.0..1.0), rng.gen_range(-1.5..1.5))
        };
        let n = rng.gen_range(1..=12);
        let Ok((z, w)) = iterate_with_derivative(family, c, n) else { continue };
        if z.norm() > 1e3 {
            continue;
        }
        checked += 1;
        let fd = fd_derivative(family, c, n, 1e-5 / (1.0 + w.norm()).sqrt());
        let rel = (fd - w).norm() / w.norm().max(1.0);
        assert!(rel < 1e-5, "{} c={c} n={n}: analytic {w}, finite difference {fd}", family.name());
    }
}

#[test]
fn orbit_record_agrees_with_param_derivative() {
    let c = Complex64::new(-0.4, 0.55);
    let rec = orbit(Family::QUADRATIC, c, 30, EscapePolicy::Standard).unwrap();
    assert_eq!(rec.escape_step, None);
    assert_eq!(rec.points.len(), 31);
    for n in [0, 1, 7, 30] {
        let w = param_derivative(Family::QUADRATIC, c, n).unwrap();
        assert!((rec.param_derivs[n] - w).norm() <= 1e-12 * w.norm().max(1.0));
    }
}

#[test]
fn overflow_is_reported() {
    assert!(param_derivative(Family::Exponential, Complex64::new(5.0, 0.0), 6).is_err());
    assert!(param_derivative(Family::QUADRATIC, Complex64::new(3.0, 0.0), 20).is_err());
}

fn multiplier(v: &Classification) -> Complex64 {
    v.multiplier().expect("attracting")
}

#[test]
fn closed_form_components() {
    let opts = ClassifyOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let mu = Complex64::from_polar(rng.gen_range(0.0..0.95), rng.gen_range(0.0..std::f64::consts::TAU));
        // period 1: fixed point z with 2z = mu
        let v = classify(Family::QUADRATIC, mu / 2.0 - mu * mu / 4.0, &opts);
        assert_eq!(v.period(), Some(1), "mu = {mu}");
        assert!((multiplier(&v) - mu).norm() < 1e-6);
        // period 2: multiplier 4(c + 1)
        let v = classify(Family::QUADRATIC, mu / 4.0 - 1.0, &opts);
        assert_eq!(v.period(), Some(2), "mu = {mu}");
        assert!((multiplier(&v) - mu).norm() < 1e-6);
        // cubic period 1: 3z^2 = mu, c = z - z^3
        let z = (mu / 3.0).sqrt();
        let v = classify(Family::unicritical(3).unwrap(), z - z * z * z, &opts);
        assert_eq!(v.period(), Some(1));
        assert!((multiplier(&v) - mu).norm() < 1e-6);
        let lambda = Complex64::from_polar(rng.gen_range(0.05..0.9), rng.gen_range(0.0..std::f64::consts::TAU));
        let v = classify(Family::Exponential, lambda.ln() - lambda, &opts);
        assert_eq!(v.period(), Some(1), "lambda = {lambda}");
        assert!((multiplier(&v) - lambda).norm() < 1e-6);
    }
}

#[test]
fn escaping_examples() {
    let opts = ClassifyOptions::default();
    assert!(classify(Family::QUADRATIC, Complex64::new(1.0, 0.0), &opts).is_escaping());
    assert!(classify(Family::QUADRATIC, Complex64::new(0.26, 0.0), &opts).is_escaping());
    assert!(classify(Family::Exponential, Complex64::new(1.0, 0.0), &opts).is_escaping());
    assert_eq!(classify(Family::Exponential, Complex64::new(-2.0, 0.0), &opts).period(), Some(1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conjugate_parameters_agree(re in -2.2f64..0.6, im in 0.0f64..1.3, exp in any::<bool>()) {
        let (family, c) = if exp {
            (Family::Exponential, Complex64::new(2.5 * re, 4.0 * im))
        } else {
            (Family::QUADRATIC, Complex64::new(re, im))
        };
        let opts = ClassifyOptions::default();
        let (a, b) = (classify(family, c, &opts), classify(family, c.conj(), &opts));
        prop_assert_eq!(a.tag(), b.tag());
        prop_assert_eq!(a.period(), b.period());
        prop_assert_eq!(a.escape_step(), b.escape_step());
        if let (Some(x), Some(y)) = (a.multiplier(), b.multiplier()) {
            prop_assert!((x - y.conj()).norm() < 1e-8);
        }
    }

    #[test]
    fn reported_period_is_minimal(re in -2.0f64..0.5, im in -1.2f64..1.2) {
        let c = Complex64::new(re, im);
        if let Classification::Attracting { period, cycle, .. } = classify(Family::QUADRATIC, c, &ClassifyOptions::default()) {
            prop_assert_eq!(cycle.len(), period);
            let z0 = cycle[0];
            let mut z = z0;
            for k in 1..=period {
                z = Family::QUADRATIC.map(c, z);
                if k < period {
                    prop_assert!((z - z0).norm() > 1e-9, "returns after {} < {}", k, period);
                }
            }
            prop_assert!((z - z0).norm() < 1e-8);
        }
    }
}

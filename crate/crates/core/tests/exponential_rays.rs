use std::f64::consts::PI;

use param_atlas::exponential::{
    branch_violations, forward_deviation, geometric_grid, landing_probe, ray_point, target_orbit, trace_ray_e, trace_ray_e_at,
    RayOptions,
};
use param_atlas::{classify, ClassifyOptions, Complex64, ExternalAddress, Family};
use proptest::prelude::*;

fn addr(s: &str) -> ExternalAddress {
    s.parse().unwrap()
}

#[test]
fn target_values() {
    let t = target_orbit(&addr("| 0"), 1.0, 700.0).unwrap();
    let f1 = 1f64.exp() - 1.0;
    assert!((t.targets[1] - Complex64::new(f1, 0.0)).norm() < 1e-15);
    assert!((t.targets[2].re - (f1.exp() - 1.0)).abs() < 1e-14);
    let t = target_orbit(&addr("0 3 | 0"), 1.0, 700.0).unwrap();
    assert_eq!(t.targets[1].im, 6.0 * PI);
    assert!(target_orbit(&addr("| 0"), 0.0, 700.0).is_err());
}

#[test]
fn real_ray_points() {
    let opts = RayOptions::default();
    let mut prev = f64::NEG_INFINITY;
    for t in [0.5, 1.0, 2.0, 5.0] {
        let p = ray_point(&addr("| 0"), t, &opts, None).unwrap();
        assert!(p.converged && p.residual < 1e-12);
        assert!(p.c.im.abs() < 1e-10);
        assert!(p.c.re > prev);
        prev = p.c.re;
        assert!(classify(Family::Exponential, p.c, &ClassifyOptions::default()).is_escaping());
    }
}

#[test]
fn orbit_follows_the_targets() {
    let opts = RayOptions::default();
    for (a, t) in [("| 0", 1.0), ("| 0 1", 1.5), ("1 | 0", 2.0), ("-2 1 | 3", 1.0), ("| 1 -1 0", 3.0)] {
        let a = addr(a);
        let p = ray_point(&a, t, &opts, None).unwrap();
        assert!(p.residual < 1e-10, "{a} at t={t}: residual {}", p.residual);
        let target = target_orbit(&a, t, opts.depth_cap).unwrap();
        assert!(branch_violations(&target, p.c).unwrap().is_empty(), "{a} at t={t}");
        let dev = forward_deviation(&target, p.c).unwrap();
        assert!(dev[target.depth / 2] < 1e-6, "{a} at t={t}: deviation {:?}", dev);
    }
}

#[test]
fn depth_cap_barely_matters() {
    let a = addr("| 0 1");
    for t in [1.0, 1.7, 3.0] {
        let lo = ray_point(&a, t, &RayOptions { depth_cap: 400.0, ..RayOptions::default() }, None).unwrap();
        let hi = ray_point(&a, t, &RayOptions::default(), None).unwrap();
        assert!((lo.c - hi.c).norm() < 1e-12, "t={t}: {} vs {}", lo.c, hi.c);
    }
}

#[test]
fn traces() {
    let opts = RayOptions::default();
    let real = trace_ray_e(&addr("| 0"), 5.0, 0.5, 32, &opts).unwrap();
    assert_eq!(real.len(), 32);
    assert!(real.points().iter().all(|p| p.c.im.abs() < 1e-9));
    let shifted = trace_ray_e(&addr("1 | 0"), 5.0, 0.5, 32, &opts).unwrap();
    assert!((shifted.first().unwrap().c.im - real.first().unwrap().c.im - 2.0 * PI).abs() < 0.1);

    let a = addr("| 0 1");
    let down = trace_ray_e(&a, 5.0, 0.5, 32, &opts).unwrap();
    let mut ts = geometric_grid(5.0, 0.5, 32).unwrap();
    ts.reverse();
    let up = trace_ray_e_at(&a, &ts, &opts).unwrap().reversed();
    assert_eq!(up.len(), down.len());
    for (p, q) in up.points().iter().zip(down.points()) {
        assert!((p.c - q.c).norm() < 1e-8, "t={}: {} vs {}", p.t, p.c, q.c);
    }
}

#[test]
fn parabolic_landing() {
    let opts = RayOptions::default();
    let root = Complex64::new(1.0, PI);
    for a in ["| 0 1", "| 1 0"] {
        let ray = trace_ray_e(&addr(a), 5.0, 1e-3, 80, &opts).unwrap();
        assert_eq!(ray.len(), 80);
        assert!((ray.last().unwrap().c - root).norm() < 1e-2, "{a} ends at {}", ray.last().unwrap().c);
    }
}

#[test]
fn landing_probes() {
    let opts = RayOptions::default();
    let ts = geometric_grid(5.0, 0.05, 40).unwrap();
    let r = landing_probe(&addr("| 0"), &ts, &opts).unwrap();
    assert!(r.complete);
    assert!(r.points.iter().all(|p| p.c_im.abs() < 1e-9));
    // approaching the real locus from the right: the tail moves left
    let tail: Vec<f64> = r.points.iter().rev().take(5).map(|p| p.c_re).collect();
    assert!(tail.windows(2).all(|w| w[0] < w[1]) && tail[0] > -1.0);

    let p = landing_probe(&addr("| 2"), &ts, &opts).unwrap();
    let m = landing_probe(&addr("| -2"), &ts, &opts).unwrap();
    for (x, y) in p.points.iter().zip(&m.points) {
        assert!((x.c_re - y.c_re).abs() < 1e-9 && (x.c_im + y.c_im).abs() < 1e-9);
    }
    let single = landing_probe(&addr("| 0"), &[1.0], &opts).unwrap();
    assert_eq!(single.tail_diameter, 0.0);
}

fn small_address() -> impl Strategy<Value = ExternalAddress> {
    (prop::collection::vec(-3i64..=3, 0..2), prop::collection::vec(-3i64..=3, 1..3))
        .prop_map(|(pre, per)| ExternalAddress::new(pre, per).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conjugate_addresses_give_conjugate_points(a in small_address(), t in 1.0f64..6.0) {
        let opts = RayOptions::default();
        let p = ray_point(&a, t, &opts, None).unwrap();
        let q = ray_point(&a.conjugate(), t, &opts, None).unwrap();
        prop_assert!(p.converged && q.converged);
        prop_assert!((p.c - q.c.conj()).norm() < 1e-10);
        let target = target_orbit(&a, t, opts.depth_cap).unwrap();
        prop_assert!(branch_violations(&target, p.c).unwrap().is_empty());
    }
}

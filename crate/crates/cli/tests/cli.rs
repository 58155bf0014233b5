use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_param-atlas")).args(args).output().unwrap()
}

fn out(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

#[test]
fn render_writes_image_grid_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = out(dir.path(), "m");
    let o = run(&["render", "--size", "40", "--out", &prefix]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ppm = std::fs::read(dir.path().join("m.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n40 40\n255\n"));
    assert_eq!(rows(&dir.path().join("m.csv")).len(), 1600);
    assert!(dir.path().join("m.manifest.json").exists());
}

#[test]
fn replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let first = out(dir.path(), "a");
    let o = run(&["render", "--family", "exp", "--window", "-3,-1,-1,1", "--size", "24", "--out", &first]);
    assert!(o.status.success());
    let second = out(dir.path(), "b");
    let o = run(&["replay", &format!("{first}.manifest.json"), "--out", &second]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for ext in ["ppm", "csv"] {
        let a = std::fs::read(dir.path().join(format!("a.{ext}"))).unwrap();
        let b = std::fs::read(dir.path().join(format!("b.{ext}"))).unwrap();
        assert_eq!(a, b, "{ext}");
    }
}

#[test]
fn conjugate_traces_mirror() {
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = (out(dir.path(), "p"), out(dir.path(), "q"));
    assert!(run(&["trace", "--angle", "1/3", "--potential", "4:0.01:20", "--out", &p]).status.success());
    assert!(run(&["trace", "--angle", "2/3", "--potential", "4:0.01:20", "--out", &q]).status.success());
    let (a, b) = (rows(&dir.path().join("p.csv")), rows(&dir.path().join("q.csv")));
    assert_eq!(a.len(), 20);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        let f = |r: &csv::StringRecord, k: usize| r[k].parse::<f64>().unwrap();
        assert!((f(x, 1) - f(y, 1)).abs() < 1e-9);
        assert!((f(x, 2) + f(y, 2)).abs() < 1e-9);
    }
}

#[test]
fn exponential_trace_of_the_real_ray() {
    let dir = tempfile::tempdir().unwrap();
    let p = out(dir.path(), "e");
    let o = run(&["trace", "--family", "exp", "--address", "| 0", "--t", "5:0.5:10", "--out", &p]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&dir.path().join("e.csv"));
    assert_eq!(r.len(), 10);
    assert!(r.iter().all(|x| x[2].parse::<f64>().unwrap().abs() < 1e-8));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = out(dir.path(), "x");
    let bad_address = run(&["trace", "--family", "exp", "--address", "| 0 q", "--out", &p]);
    assert_eq!(bad_address.status.code(), Some(2));
    assert!(!bad_address.stderr.is_empty());
    assert_eq!(run(&["render", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["render", "--window", "1,0,0,1", "--out", &p]).status.code(), Some(2));
}

#[test]
fn unreachable_gamma_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let p = out(dir.path(), "g");
    let o = run(&["gamma", "--address", "| 0", "--t", "2", "--n", "8:9", "--out", &p]);
    assert_eq!(o.status.code(), Some(3));
    assert!(dir.path().join("g.gamma.csv").exists());
}

#[test]
fn gamma_points_near_the_real_ray() {
    let dir = tempfile::tempdir().unwrap();
    let p = out(dir.path(), "g");
    let o = run(&["gamma", "--address", "| 0", "--t", "0.117", "--n", "19:20", "--out", &p]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(rows(&dir.path().join("g.gamma.csv")).len(), 4);
    assert_eq!(rows(&dir.path().join("g.squeeze.csv")).len(), 4);
}

#[test]
fn separate_then_fiber_probe() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"[
        {"kind": "exponential_ray", "address": "| 0 1", "t_hi": 5, "t_lo": 0.001, "steps": 80},
        {"kind": "exponential_ray", "address": "| 1 0", "t_hi": 5, "t_lo": 0.001, "steps": 80}
    ]"#,
    )
    .unwrap();
    let line = out(dir.path(), "wake");
    let o = run(&[
        "separate",
        "--spec",
        spec.to_str().unwrap(),
        "--query",
        "3,3;-3,0",
        "--query",
        "-3,0;3,0",
        "--out",
        &line,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let verdicts: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("wake.json")).unwrap()).unwrap();
    assert_eq!(verdicts[0]["separated"], true);
    assert_eq!(verdicts[1]["separated"], false);

    let probe = out(dir.path(), "fiber");
    let o = run(&["probe", "--base", "-3,0", "--candidates", "3,3;-2,0.5", "--line", &line, "--out", &probe]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("fiber.json")).unwrap()).unwrap();
    assert_eq!(report["separated_from_base"], serde_json::json!([true, false]));
}

#[test]
fn landing_probe_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = out(dir.path(), "land");
    let o = run(&["probe", "--address", "| 0 1", "--t", "5:0.01:30", "--out", &p]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("land.json")).unwrap()).unwrap();
    assert_eq!(report["complete"], true);
    assert_eq!(report["points"].as_array().unwrap().len(), 30);
}

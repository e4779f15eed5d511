use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qsl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsl")).current_dir(dir).args(args).output().expect("spawn qsl")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = qsl(dir, args);
    assert!(out.status.success(), "qsl {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn load(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn sine_zeros_file_has_21_zeros() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["series", "--preset", "sin", "--output", "sin.json"]);
    ok(d, &["zeros", "--input", "sin.json", "--rect", "-10.5,10.5,-1,1", "--tol", "1e-12", "--output", "zeros.json"]);
    let v = load(&d.join("zeros.json"));
    assert_eq!(v["schema"], "qsl/1");
    assert_eq!(v["tool"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["tol"], 1e-12);
    let points = v["result"]["points"].as_array().unwrap();
    assert_eq!(points.len(), 21);
    for (p, k) in points.iter().zip(-10..=10) {
        assert!((p["re"].as_f64().unwrap() - k as f64).abs() < 1e-9);
        assert!(p["im"].as_f64().unwrap().abs() < 1e-9);
    }
}

#[test]
fn cosine_pipeline_round_trips() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["series", "--preset", "cos", "--output", "cos.json"]);
    ok(d, &["atoms", "--input", "cos.json", "--tail-tol", "1e-10", "--output", "atoms.json"]);
    ok(d, &["reconstruct", "--atoms", "atoms.json", "--output", "rec.json"]);
    ok(d, &["roundtrip", "--q", "cos.json", "--rec", "rec.json", "--rect", "-3,3,-1,1", "--output", "rt.json"]);
    let r = &load(&d.join("rt.json"))["result"];
    assert!(r["ratio_deviation"].as_f64().unwrap() < 1e-5);
    assert!(r["zero_distance"].as_f64().unwrap() < 1e-6);
    assert_eq!(r["zero_count"], 6);
}

#[test]
fn missing_rect_is_a_precondition_error() {
    let dir = TempDir::new().unwrap();
    let out = qsl(dir.path(), &["zeros", "--preset", "sin"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--rect"));
}

#[test]
fn numeric_failure_exits_3() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["atoms", "--preset", "cos", "--output", "atoms.json"]);
    ok(d, &["reconstruct", "--atoms", "atoms.json", "--output", "rec.json"]);
    let out = qsl(d, &["roundtrip", "--preset", "sin", "--rec", "rec.json", "--rect", "-3,3,-1,1"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_tolerance_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = qsl(dir.path(), &["atoms", "--preset", "cos", "--tail-tol", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tail-tol"));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let run = |threads: &str| {
        let dir = TempDir::new().unwrap();
        let out = Command::new(env!("CARGO_BIN_EXE_qsl"))
            .current_dir(dir.path())
            .env("QSL_THREADS", threads)
            .args(["zeros", "--preset", "threefreq", "--rect", "-20.3,20.3,-2,2", "--output", "z.json"])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(dir.path().join("z.json")).unwrap()
    };
    let a = run("1");
    assert!(a == run("1"), "repeated runs differ");
    assert!(a == run("4"), "thread count changes the output");
}

#[test]
fn artifacts_chain_through_pair_der_apcheck_and_growth() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["zeros", "--preset", "cos", "--rect", "-300,300,-1,1", "--output", "zeros.json"]);
    ok(d, &["atoms", "--preset", "cos", "--output", "atoms.json"]);
    ok(d, &["pair", "--zeros", "zeros.json", "--atoms", "atoms.json", "--half-width", "1.3", "--output", "pair.json"]);
    let p = load(&d.join("pair.json"));
    assert!(p["result"]["duality"]["rel_error"].as_f64().unwrap() < 1e-6);

    ok(d, &["verify-der", "--zeros", "zeros.json", "--atoms", "atoms.json", "--zeta", "0.3,1", "--tol", "1e-4", "--output", "der.json"]);
    let v = load(&d.join("der.json"));
    assert!(v["result"]["max_rel_error"].as_f64().unwrap() < 1e-4);

    ok(d, &["apcheck", "--zeros", "zeros.json", "--epsilon", "0.05", "--tau-max", "10", "--output", "ap.json"]);
    let ap = load(&d.join("ap.json"));
    let periods: Vec<f64> =
        ap["result"]["almost_periods"]["periods"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(periods.contains(&0.0) && periods.contains(&1.0) && periods.contains(&10.0));
    assert!((ap["result"]["density"]["density"].as_f64().unwrap() - 1.0).abs() < 0.01);

    ok(d, &["growth", "--zeros", "zeros.json", "--atoms", "atoms.json", "--format", "csv", "--output", "g.csv"]);
    let csv = std::fs::read_to_string(d.join("g.csv")).unwrap();
    assert!(csv.starts_with("r,m_mu,atom_variation\n"));
    assert_eq!(csv.lines().count(), 33);
}

#[test]
fn csv_is_refused_where_there_is_no_tabular_form() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["atoms", "--preset", "cos", "--output", "atoms.json"]);
    let out = qsl(d, &["reconstruct", "--atoms", "atoms.json", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(2));
}

use std::fs;
use std::path::{Path, PathBuf};

use adt_design::cli::{run_with, EXIT_DEGENERATE, EXIT_INPUT, EXIT_OK};
use adt_design::design::{c_criterion, round_to_exact, ApproximateDesign};
use adt_design::scenario::load_scenario;
use serde_json::Value;
use tempfile::TempDir;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let mut argv = vec!["adt-design"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} missing in {v}"))
}

fn dir_str(d: &TempDir) -> String {
    d.path().display().to_string()
}

fn read_design(path: &Path) -> ApproximateDesign {
    ApproximateDesign::read_csv(fs::File::open(path).unwrap()).unwrap()
}

#[test]
fn failure_time_single_stress() {
    let dir = TempDir::new().unwrap();
    let r = run(&["failure-time", &data("example1.json"), "--out-dir", &dir_str(&dir)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert!((num(&v, "t_alpha") - 1.583).abs() < 1e-3);
    assert_eq!(v, json(&dir.path().join("failure_time.json")));
    let curve = fs::read_to_string(dir.path().join("failure_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 202);
}

#[test]
fn failure_time_two_stresses() {
    let r = run(&["failure-time", &data("example2.json")]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert!((num(&v, "t_alpha") - 10.25).abs() < 5e-3);
    assert!((num(&v, "alpha_max") - 0.939).abs() < 5e-4);
}

#[test]
fn alpha_above_alpha_max_is_degenerate() {
    let r = run(&["failure-time", &data("example2.json"), "--alpha", "0.95"]);
    assert_eq!(r.code, EXIT_DEGENERATE);
    assert!(r.stderr.contains("alpha_max"), "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert!(v["t_alpha"].is_null());
}

#[test]
fn stress_design_with_benchmarks() {
    let dir = TempDir::new().unwrap();
    let r = run(&["design", "stress", &data("example1.json"), "--benchmark", "--out-dir", &dir_str(&dir)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let d = read_design(&dir.path().join("stress_design.csv"));
    assert!((d.weight_at(&[0.0]) - 0.95).abs() < 5e-3);
    assert!((d.weight_at(&[1.0]) - 0.05).abs() < 5e-3);
    let report = json(&dir.path().join("stress_report.json"));
    let eff2 = report["benchmarks"]["efficiency_uniform_2"].as_f64().unwrap();
    assert!((eff2 - 0.55).abs() < 5e-3);
    assert!(num(&report, "certificate_gap") <= 1e-6);
}

#[test]
fn interacting_stresses_give_the_product_design() {
    let dir = TempDir::new().unwrap();
    let r = run(&["design", "stress", &data("example2.json"), "--out-dir", &dir_str(&dir)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let d = read_design(&dir.path().join("stress_design.csv"));
    let counts = round_to_exact(&d, 100).unwrap();
    let at = |x: [f64; 2]| counts[d.support().iter().position(|p| p[..] == x[..]).unwrap()];
    assert_eq!([at([0.0, 0.0]), at([0.0, 1.0]), at([1.0, 0.0]), at([1.0, 1.0])], [58, 17, 19, 6]);
}

#[test]
fn time_plan_and_exact_plan() {
    let dir = TempDir::new().unwrap();
    let r = run(&["design", "time", &data("example2.json"), "--k", "6", "--grid", "21", "--out-dir", &dir_str(&dir)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let report = json(&dir.path().join("time_report.json"));
    let plan: Vec<f64> = report["exact_plan"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let expected = [0.0, 0.05, 0.10, 0.90, 0.95, 1.0];
    assert_eq!(plan.len(), 6);
    for (a, b) in plan.iter().zip(expected) {
        assert!((a - b).abs() < 1e-9, "{plan:?}");
    }
    let eff = num(&report, "exact_plan_efficiency");
    assert!((eff - 0.987).abs() <= 0.015, "{eff}");

    let d = read_design(&dir.path().join("time_design.csv"));
    for t in [0.0, 0.05, 0.95, 1.0] {
        assert!((d.weight_at(&[t]) - 1.0 / 6.0).abs() < 1e-6, "t = {t}");
    }
    for j in 4..17 {
        assert_eq!(d.weight_at(&[j as f64 * 0.05]), 0.0, "interior point {j}");
    }
    let profile = fs::read_to_string(dir.path().join("time_weights.csv")).unwrap();
    assert_eq!(profile.lines().count(), 22);
}

#[test]
fn destructive_eight_point_design() {
    let dir = TempDir::new().unwrap();
    let r = run(&["design", "destructive", &data("example2.json"), "--out-dir", &dir_str(&dir)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let d = read_design(&dir.path().join("destructive_design.csv"));
    assert_eq!(d.len(), 8);
    let counts = round_to_exact(&d.sorted(), 100).unwrap();
    assert_eq!(counts, vec![25, 33, 7, 10, 9, 11, 2, 3]);
    for stem in ["sensitivity_median_time", "sensitivity_sigma_ratio", "pi_star_median_time", "pi_star_sigma_ratio"] {
        let text = fs::read_to_string(dir.path().join(format!("{stem}.csv"))).unwrap();
        assert_eq!(text.lines().count(), 51, "{stem}");
    }
}

#[test]
fn design_csv_round_trip_reproduces_the_criterion() {
    for (file, cmd) in [("example1.json", "stress"), ("example2.json", "stress"), ("example3.json", "stress")] {
        let dir = TempDir::new().unwrap();
        let r = run(&["design", cmd, &data(file), "--out-dir", &dir_str(&dir)]);
        assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
        let report = json(&dir.path().join("stress_report.json"));
        let written = report["criterion"]["value"].as_f64().unwrap();

        let csv = dir.path().join("stress_design.csv");
        let (_, s) = load_scenario(&data(file)).unwrap();
        let again = c_criterion(&read_design(&csv), s.model().stress(), &s.c_stress()).value;
        assert!((again - written).abs() <= 1e-12 * written.abs(), "{file}: {again} vs {written}");

        let e = run(&["efficiency", &data(file), &csv.display().to_string()]);
        assert_eq!(e.code, EXIT_OK, "{}", e.stderr);
        let v: Value = serde_json::from_str(&e.stdout).unwrap();
        assert!((num(&v, "criterion_value") - written).abs() <= 1e-12 * written.abs());
        assert!((num(&v, "efficiency") - 1.0).abs() < 1e-9);
    }
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<(PathBuf, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (PathBuf::from(p.file_name().unwrap()), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn outputs_are_byte_stable() {
    let design = {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("xi.csv");
        run(&["design", "stress", &data("example1.json"), "--csv", &path.display().to_string()]);
        (dir, path)
    };
    let xi = design.1.display().to_string();
    let commands: Vec<Vec<&str>> = vec![
        vec!["failure-time", "DATA"],
        vec!["design", "stress", "DATA", "--benchmark"],
        vec!["design", "time", "DATA"],
        vec!["design", "destructive", "DATA", "--benchmark"],
        vec!["validate", "DATA", &xi, "--n", "40", "--reps", "20", "--seed", "7"],
        vec!["simulate", "DATA", &xi, "--n", "10", "--reps", "2", "--seed", "3"],
    ];
    let scenario = data("example1.json");
    for cmd in commands {
        let args: Vec<&str> = cmd.iter().map(|a| if *a == "DATA" { scenario.as_str() } else { a }).collect();
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let dir = TempDir::new().unwrap();
            let ds = dir_str(&dir);
            let mut full = args.clone();
            full.extend(["--out-dir", ds.as_str()]);
            let r = run(&full);
            assert_eq!(r.code, EXIT_OK, "{args:?}: {}", r.stderr);
            outputs.push((r.stdout, snapshot(dir.path())));
        }
        assert!(!outputs[0].1.is_empty(), "{args:?} wrote no files");
        assert_eq!(outputs[0], outputs[1], "{args:?}");
    }
}

#[test]
fn single_replication_warns() {
    let dir = TempDir::new().unwrap();
    let xi = dir.path().join("xi.csv");
    run(&["design", "stress", &data("example1.json"), "--csv", &xi.display().to_string()]);
    let r = run(&["validate", &data("example1.json"), &xi.display().to_string(), "--reps", "1", "--n", "50"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert!(v["empirical_variance"].is_null());
    let warnings = v["warnings"].as_array().unwrap();
    assert!(warnings.iter().any(|w| w.as_str().unwrap().contains("undefined")), "{warnings:?}");
}

#[test]
fn validation_ratio_near_one() {
    let dir = TempDir::new().unwrap();
    let xi = dir.path().join("xi.csv");
    run(&["design", "stress", &data("example1.json"), "--csv", &xi.display().to_string()]);
    let r = run(&[
        "validate",
        &data("example1.json"),
        &xi.display().to_string(),
        "--n",
        "200",
        "--reps",
        "400",
        "--seed",
        "1",
        "--out-dir",
        &dir_str(&dir),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let v = json(&dir.path().join("validation_report.json"));
    let ratio = num(&v, "ratio");
    assert!((0.8..1.2).contains(&ratio), "{ratio}");
    let lines = fs::read_to_string(dir.path().join("replicates.csv")).unwrap().lines().count();
    assert_eq!(lines, 401);
}

#[test]
fn simulate_writes_long_format() {
    let dir = TempDir::new().unwrap();
    let xi = dir.path().join("xi.csv");
    run(&["design", "stress", &data("example2.json"), "--csv", &xi.display().to_string()]);
    let r = run(&["simulate", &data("example2.json"), &xi.display().to_string(), "--n", "12", "--reps", "2"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let mut lines = r.stdout.lines();
    assert_eq!(lines.next(), Some("replicate,unit,x1,x2,t,y"));
    // example 2 measures six times per unit
    assert_eq!(lines.count(), 2 * 12 * 6);
}

#[test]
fn input_errors_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.csv").display().to_string();
    assert_eq!(run(&["validate", &data("example1.json"), &missing]).code, EXIT_INPUT);
    assert_eq!(run(&["failure-time", &missing]).code, EXIT_INPUT);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"model": {}, "surprise": 1}"#).unwrap();
    assert_eq!(run(&["failure-time", &bad.display().to_string()]).code, EXIT_INPUT);

    let outside = dir.path().join("outside.csv");
    fs::write(&outside, "x1,weight\n0,0.5\n2,0.5\n").unwrap();
    let r = run(&["efficiency", &data("example1.json"), &outside.display().to_string()]);
    assert_eq!(r.code, EXIT_INPUT);
    assert!(r.stderr.contains("outside"), "{}", r.stderr);

    assert_eq!(run(&["design", "sideways", &data("example1.json")]).code, EXIT_INPUT);
    assert_eq!(run(&["failure-time", &data("example1.json"), "--alpha", "1.5"]).code, EXIT_INPUT);
}

//! The `magkit` binary run as a subprocess: exit codes, outputs and the JSON
//! schemas under docs/schemas.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn magkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magkit"))
        .args(args)
        .env_remove("MAGKIT_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {}", String::from_utf8_lossy(&o.stderr)))
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas").join(format!("{name}.schema.json"));
    let s: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&s).unwrap()
}

fn assert_valid(name: &str, v: &Value) {
    let errors: Vec<String> = schema(name).iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}\n{v}");
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(p: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn compute_two_points_at_ln2() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "pair.csv", "x\n0\n0.6931471805599453\n");
    let weights = dir.path().join("w.csv");
    let o = magkit(&["compute", "--method", "exact", "--scale", "1", s(&input), "--weights", s(&weights)]);
    assert_eq!(o.status.code(), Some(0));
    let rec = stdout_json(&o);
    assert_valid("run_record", &rec);
    assert!((rec["magnitude"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-12);
    assert_eq!(rec["input_digest"].as_str().unwrap().len(), 64);
    let w = csv_rows(&weights);
    assert_eq!(w.len(), 2);
    assert!((w[0][1].parse::<f64>().unwrap() - 2.0 / 3.0).abs() < 1e-12);

    let closed = stdout_json(&magkit(&["compute", "--method", "closed-1d", s(&input)]));
    assert!((closed["magnitude"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-12);
}

#[test]
fn compute_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "p.csv", "0,0\n1,0.5\n2.5,1\n-1,3\n0.2,-2\n");
    let a = stdout_json(&magkit(&["compute", "--method", "gd", "--batch", "2", "--seed", "3", s(&input)]));
    let b = stdout_json(&magkit(&["compute", "--method", "gd", "--batch", "2", "--seed", "3", s(&input)]));
    assert_eq!(a["magnitude"], b["magnitude"]);
    assert_eq!(a["config"], b["config"]);
    assert_valid("run_record", &a);
}

#[test]
fn iter_norm_on_homogeneous_space_takes_one_iteration() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "cross.csv", "1,0,0\n-1,0,0\n0,1,0\n0,-1,0\n0,0,1\n0,0,-1\n");
    let trace = dir.path().join("trace.csv");
    let o = magkit(&["compute", "--method", "iter-norm", "--tol", "1e-6", s(&input), "--trace", s(&trace)]);
    let rec = stdout_json(&o);
    assert_eq!(rec["iterations"], 1);
    assert_eq!(rec["converged"], true);
    assert_eq!(rec["method"], "iter_norm");
    assert!(fs::read_to_string(trace).unwrap().lines().count() >= 2);
}

#[test]
fn duplicate_rows_are_an_input_error() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "dup.csv", "0,0\n1,1\n0,0\n");
    let o = magkit(&["compute", "--method", "exact", s(&input)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr_json(&o);
    assert_valid("error", &err);
    assert_eq!(err["code"], "DuplicatePoints");
    assert!(o.stdout.is_empty());
    let merged = magkit(&["compute", "--merge-duplicates", s(&input)]);
    assert_eq!(merged.status.code(), Some(0));
}

#[test]
fn input_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.csv", "0,1\n2,x\n");
    let o = magkit(&["compute", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["code"], "Parse");

    let missing = dir.path().join("absent.csv");
    let o = magkit(&["compute", s(&missing)]);
    assert_eq!((o.status.code(), stderr_json(&o)["code"].clone()), (Some(1), Value::from("Io")));

    let good = write(&dir, "good.csv", "0\n1\n");
    let o = magkit(&["compute", "--method", "nope", s(&good)]);
    assert_eq!(o.status.code(), Some(1));
    assert_valid("error", &stderr_json(&o));
    let o = magkit(&["compute", "--scale", "0", s(&good)]);
    assert_eq!((o.status.code(), stderr_json(&o)["code"].clone()), (Some(1), Value::from("NonPositiveScale")));
}

#[test]
fn diverging_gradient_descent_is_a_solver_error() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "tight.csv", "0,0\n0.01,0\n0,0.01\n0.01,0.01\n");
    let o = magkit(&["compute", "--method", "gd", "--lr", "5", "--momentum", "0.9", s(&input)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_json(&o);
    assert_valid("error", &err);
    assert!(matches!(err["code"].as_str().unwrap(), "Diverged" | "NonFiniteUpdate"));
}

#[test]
fn function_sweep_plateaus_on_three_points() {
    let dir = TempDir::new().unwrap();
    // Two close points and a far one: the effective count climbs 1, 2, 3.
    let input = write(&dir, "three.csv", "0,0\n0.01,0\n100,0\n");
    let out = dir.path().join("sweep.csv");
    let o = magkit(&["function", s(&input), "--t-min", "1e-5", "--t-max", "1e4", "--t-steps", "61", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_valid("run_record", &stdout_json(&o));
    let values: Vec<f64> = csv_rows(&out).iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(values.len(), 61);
    assert!((values[0] - 1.0).abs() < 1e-2);
    assert!(values.iter().any(|v| (v - 2.0).abs() < 0.05));
    assert!((values[60] - 3.0).abs() < 1e-6);
}

#[test]
fn single_scale_sweep_equals_compute() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "p.csv", "0,0\n1,2\n3,1\n");
    let out = dir.path().join("sweep.csv");
    let f = stdout_json(&magkit(&["function", s(&input), "--t-min", "0.7", "--t-max", "0.7", "--t-steps", "1", "--out", s(&out)]));
    let c = stdout_json(&magkit(&["compute", "--scale", "0.7", s(&input)]));
    assert_eq!(csv_rows(&out).len(), 1);
    assert!((f["magnitude"].as_f64().unwrap() - c["magnitude"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn function_dimension_of_a_line_grid() {
    let dir = TempDir::new().unwrap();
    let body: String = (0..300).map(|i| format!("{}\n", i as f64 / 299.0)).collect();
    let input = write(&dir, "grid.csv", &body);
    let out = dir.path().join("sweep.csv");
    let o = magkit(&[
        "function", s(&input), "--t-min", "0.1", "--t-max", "1e5", "--t-steps", "40", "--method", "closed-1d",
        "--dimension-t-min", "5", "--dimension-t-max", "200", "--out", s(&out),
    ]);
    let rec = stdout_json(&o);
    let slope = rec["details"]["dimension"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn function_grid_misuse_exits_one() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "p.csv", "0\n1\n");
    let out = dir.path().join("o.csv");
    for args in [
        vec!["--t-min", "2", "--t-max", "1", "--t-steps", "5"],
        vec!["--t-min", "0", "--t-max", "1", "--t-steps", "5"],
        vec!["--t-steps", "0"],
        vec!["--preset", "sqrt-r"],
        vec!["--preset", "sqrt-r", "--training-size", "4", "--t-min", "1"],
    ] {
        let mut full = vec!["function", s(&input), "--out", s(&out)];
        full.extend(args.iter().copied());
        let o = magkit(&full);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert_valid("error", &stderr_json(&o));
    }
    let o = magkit(&["function", s(&input), "--out", s(&out), "--preset", "sqrt-r", "--training-size", "16"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["details"]["t_min"], 4.0);
}

#[test]
fn subset_methods() {
    let dir = TempDir::new().unwrap();
    let body: String = (0..30).map(|i| format!("{},{}\n", (i % 6) as f64 * 1.3, (i / 6) as f64 * 0.9)).collect();
    let input = write(&dir, "pts.csv", &body);
    let out = dir.path().join("curve.csv");

    let exact = stdout_json(&magkit(&["compute", s(&input)]))["magnitude"].as_f64().unwrap();
    let greedy = stdout_json(&magkit(&["subset", "--method", "greedy", "--budget", "30", s(&input), "--out", s(&out)]));
    assert_valid("run_record", &greedy);
    assert_eq!(csv_rows(&out).len(), 30);
    assert!((greedy["magnitude"].as_f64().unwrap() - exact).abs() < 1e-8);

    let dump = dir.path().join("h.json");
    let h = magkit(&["subset", "--method", "hierarchy", s(&input), "--out", s(&out), "--dump-hierarchy", s(&dump)]);
    assert_eq!(h.status.code(), Some(0));
    assert_valid("hierarchy_dump", &serde_json::from_str(&fs::read_to_string(&dump).unwrap()).unwrap());
    assert!((stdout_json(&h)["magnitude"].as_f64().unwrap() - exact).abs() < 1e-8);

    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    magkit(&["subset", "--method", "random", "--seed", "7", "--sizes", "10,20,25", s(&input), "--out", s(&a)]);
    magkit(&["subset", "--method", "random", "--seed", "7", "--sizes", "10,20,25", s(&input), "--out", s(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(csv_rows(&a).len(), 3);
    assert!(fs::read_to_string(&a).unwrap().starts_with("size,point_id,magnitude\n"));
}

#[test]
fn subset_flag_misuse_exits_one() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "p.csv", "0\n1\n2\n");
    let out = dir.path().join("o.csv");
    for args in [
        vec!["--method", "greedy", "--sizes", "1,2"],
        vec!["--method", "random", "--tolerance", "0.1"],
        vec!["--method", "greedy", "--dump-hierarchy", "x.json"],
        vec!["--budget", "0"],
        vec!["--budget", "4"],
        vec!["--method", "sideways"],
    ] {
        let mut full = vec!["subset", s(&input), "--out", s(&out)];
        full.extend(args.iter().copied());
        assert_eq!(magkit(&full).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn cluster_four_point_line() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "line.csv", "0\n0.1\n10\n10.1\n");
    let out = dir.path().join("assign.csv");
    let trace = dir.path().join("trace.json");
    let o = magkit(&["cluster", s(&input), "--theta", "0.5", "--out", s(&out), "--trace-json", s(&trace)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["details"]["cluster_count"], 2);
    let labels: Vec<String> = csv_rows(&out).iter().map(|r| r[1].clone()).collect();
    assert_eq!(labels[0], labels[1]);
    assert_eq!(labels[2], labels[3]);
    assert_ne!(labels[0], labels[2]);
    assert_valid("cluster_trace", &serde_json::from_str(&fs::read_to_string(&trace).unwrap()).unwrap());

    let o = magkit(&["cluster", s(&input), "--theta", "0", "--out", s(&out)]);
    assert_eq!(stdout_json(&o)["details"]["cluster_count"], 4);
}

#[test]
fn cluster_sweep_and_misuse() {
    let dir = TempDir::new().unwrap();
    let mut body = String::new();
    for (cx, cy) in [(0.0, 0.0), (20.0, 0.0), (10.0, 17.0)] {
        for k in 0..8 {
            let a = k as f64 * 0.785;
            body += &format!("{},{}\n", cx + 0.5 * a.cos(), cy + 0.5 * a.sin());
        }
    }
    let input = write(&dir, "blobs.csv", &body);
    let out = dir.path().join("profile.csv");
    let o = magkit(&["cluster", s(&input), "--sweep", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["details"]["persistent_count"], 3);
    assert!(fs::read_to_string(&out).unwrap().starts_with("theta,cluster_count\n"));

    assert_eq!(magkit(&["cluster", s(&input), "--out", s(&out)]).status.code(), Some(1));
    assert_eq!(magkit(&["cluster", s(&input), "--theta", "0.5", "--sweep", "--out", s(&out)]).status.code(), Some(1));
}

#[test]
fn bench_requires_pinned_threads() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench.csv");
    let o = magkit(&["bench", "--sizes", "40", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert_valid("error", &stderr_json(&o));

    let o = Command::new(env!("CARGO_BIN_EXE_magkit"))
        .args(["bench", "--sizes", "40,80", "--methods", "exact,iter-norm", "--repeats", "1", "--seed", "5", "--out", s(&out)])
        .env("MAGKIT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_valid("run_record", &stdout_json(&o));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 4);
    for r in rows.iter().filter(|r| r[1] == "iter-norm") {
        assert!(r[4].parse::<f64>().unwrap() <= 0.01);
    }
    let o = magkit(&["--threads", "1", "bench", "--sizes", "40", "--methods", "lu"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_suites() {
    let o = magkit(&["verify", "counterexample"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report = stdout_json(&o);
    assert_valid("verify_report", &report);
    let gap = report["checks"][0]["detail"]["gap"].as_f64().unwrap();
    assert!((7.16..=7.20).contains(&gap));

    for suite in ["submod-1d", "submod-3pt"] {
        let o = magkit(&["verify", suite, "--fuzz", "10000", "--seed", "1"]);
        assert_eq!(o.status.code(), Some(0));
        let report = stdout_json(&o);
        assert_valid("verify_report", &report);
        assert_eq!(report["suite"], suite);
        assert_eq!(report["checks"][0]["detail"]["violations"], 0);
    }
    assert_eq!(magkit(&["verify", "submod1d"]).status.code(), Some(1));
}

#[test]
fn hierarchy_dump_to_stdout_and_file() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "p.csv", "0\n1\n2\n3\n");
    let o = magkit(&["hierarchy", s(&input)]);
    let dump = stdout_json(&o);
    assert_valid("hierarchy_dump", &dump);
    assert_eq!(dump["levels"][0], serde_json::json!([0, 1, 2, 3]));
    assert_eq!(dump["levels"].as_array().unwrap().last().unwrap().as_array().unwrap().len(), 1);

    let out = dir.path().join("h.json");
    let o = magkit(&["hierarchy", s(&input), "--out", s(&out)]);
    assert_valid("run_record", &stdout_json(&o));
    let file: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(file, dump);
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(magkit(&["--help"]).status.code(), Some(0));
    assert_eq!(magkit(&["--version"]).status.code(), Some(0));
    assert_eq!(magkit(&[]).status.code(), Some(1));
}

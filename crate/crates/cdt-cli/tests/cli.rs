//! End-to-end tests driving the compiled `cdt` binary.

use std::path::Path;
use std::process::{Command, Output};

use cdt_bounds::io;
use cdt_bounds::model::CdtInstance;
use nalgebra::{DMatrix, DVector};

/// Two-dimensional reference instance: indefinite objective, axis-aligned
/// ellipsoid, both constraints active at the optimum (value −4).
fn example1() -> CdtInstance {
    CdtInstance::new(
        DMatrix::from_row_slice(2, 2, &[-4.0, 1.0, 1.0, -2.0]),
        DVector::from_vec(vec![1.0, 1.0]),
        DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]),
        DVector::from_vec(vec![0.0, 0.0]),
        2.0,
    )
    .unwrap()
}

fn cdt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_example1(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("example1.json");
    io::write_instance(&example1(), &path).unwrap();
    path
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON object")
}

#[test]
fn solve_dual_reports_reference_bound() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example1(dir.path());
    let out = cdt(&["solve", "--instance", path.to_str().unwrap(), "--bound", "dual"]);
    let v = stdout_json(&out);
    assert_eq!(v["bound"], "dual");
    assert!((v["lb"].as_f64().unwrap() - (-4.25)).abs() <= 1e-3);
    assert!((v["lambda"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
    assert_eq!(v["solved"], serde_json::Value::Bool(false));
}

#[test]
fn solve_twoopt_closes_gap() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example1(dir.path());
    let out = cdt(&[
        "solve",
        "--instance",
        path.to_str().unwrap(),
        "--bound",
        "twoopt",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["solved"], serde_json::Value::Bool(true));
    let lb = v["lb"].as_f64().unwrap();
    assert!((lb - (-4.0)).abs() / 4.0 <= 1e-4, "lb = {lb}");
    assert!((v["ub"].as_f64().unwrap() - (-4.0)).abs() <= 1e-6);
}

#[test]
fn solve_trace_file_records_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example1(dir.path());
    let trace = dir.path().join("trace.csv");
    let out = cdt(&[
        "solve",
        "--instance",
        path.to_str().unwrap(),
        "--bound",
        "oneopt",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iteration,lambda,lb,anchor"));
    let first = lines.next().expect("at least one iteration");
    // Anchor column holds the accepted perturbed anchor (semicolon-joined).
    assert_eq!(first.split(',').count(), 4);
    assert!(first.split(',').nth(3).unwrap().contains(';'));
}

#[test]
fn solve_missing_file_exits_2_without_output() {
    let out = cdt(&["solve", "--instance", "/nonexistent.json", "--bound", "dual"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn solve_rejects_unknown_bound_name() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example1(dir.path());
    let out = cdt(&[
        "solve",
        "--instance",
        path.to_str().unwrap(),
        "--bound",
        "tightest",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_writes_records_and_exact_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    write_example1(dir.path());
    let csv = dir.path().join("report.csv");
    let out = cdt(&[
        "bench",
        "--dir",
        dir.path().to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
        "--jobs",
        "1",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    let (records, aggregates) = io::parse_benchmark_csv(&text).unwrap();
    assert_eq!(records.len(), 5);
    assert_eq!(io::recompute_aggregates(&records), aggregates);
}

#[test]
fn bench_empty_directory_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("report.csv");
    let out = cdt(&[
        "bench",
        "--dir",
        dir.path().to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_is_deterministic_across_invocations() {
    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    for dir in [&dir1, &dir2] {
        let out = cdt(&[
            "gen",
            "--n",
            "3",
            "--count",
            "2",
            "--seed",
            "10",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for name in ["cdt_n3_s10.json", "cdt_n3_s11.json"] {
        let a = std::fs::read(dir1.path().join(name)).unwrap();
        let b = std::fs::read(dir2.path().join(name)).unwrap();
        assert!(!a.is_empty() && a == b, "{name} differs between runs");
        io::read_instance(&dir1.path().join(name)).expect("generated file validates");
    }
}

#[test]
fn gen_rejects_dimension_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = cdt(&[
        "gen",
        "--n",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_reports_pass_for_reference_instance() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example1(dir.path());
    let out = cdt(&["check", "--instance", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("n: 2"));
    assert!(text.contains("ell_a: 0"));
    assert!(text.contains("a0: 2"));
    let expected = example1().lambda_hat().unwrap();
    assert!(
        text.contains(&format!("lambda_hat: {expected}")),
        "lambda_hat line must match the library value exactly: {text}"
    );
    assert!(text.contains("verdict: pass"));
}

#[test]
fn check_fails_non_positive_definite_ellipsoid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"n":2,"Q":[[1.0,0.0],[0.0,1.0]],"q":[0.0,0.0],"A":[[1.0,0.0],[0.0,-1.0]],"a":[0.0,0.0],"a0":1.0}"#,
    )
    .unwrap();
    let out = cdt(&["check", "--instance", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("verdict: fail"), "{text}");
}

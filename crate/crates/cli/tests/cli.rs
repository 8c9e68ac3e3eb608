use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn problems() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn kaluza(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kaluza")).args(args).env_remove("KK_JOBS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn problem(name: &str) -> String {
    problems().join(name).display().to_string()
}

#[test]
fn validate_builtin_passes() {
    let o = kaluza(&["validate", "--input", &problem("su2_standard.json")]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["passed"], true);
    assert!((r["data"]["cosmological_constant"].as_f64().unwrap() - 0.75).abs() < 1e-14);
}

#[test]
fn broken_jacobi_reports_offending_indices() {
    let path = scratch("broken.json");
    // [t1,t2] = t1, [t2,t3] = t2, [t3,t1] = t3 on a one-dimensional base.
    let spec = serde_json::json!({
        "algebra": {
            "n": 1, "r": 3,
            "c": [[1, 1, 2, 1.0], [1, 2, 1, -1.0], [2, 2, 3, 1.0], [2, 3, 2, -1.0], [3, 3, 1, 1.0], [3, 1, 3, -1.0]],
            "h_b": [[1.0]],
            "h_k": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        }
    });
    std::fs::write(&path, spec.to_string()).unwrap();
    let o = kaluza(&["validate", "--input", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let r = report(&o);
    let jacobi = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "jacobi").unwrap();
    assert_eq!(jacobi["passed"], false);
    assert!(jacobi["detail"].as_str().unwrap().contains("offending indices"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL jacobi"));
}

#[test]
fn missing_inputs_are_usage_errors() {
    let path = scratch("dangling.json");
    std::fs::write(&path, r#"{"algebra": {"builtin": "su2", "n": 2}, "fields": "nowhere.json"}"#).unwrap();
    assert_eq!(code(&kaluza(&["curvature", "--input", path.to_str().unwrap()])), 64);
    assert_eq!(code(&kaluza(&["curvature", "--input", "/nonexistent/problem.json"])), 64);
    assert_eq!(code(&kaluza(&["curvature"])), 64);
    assert_eq!(code(&kaluza(&["frobnicate"])), 64);
    assert_eq!(code(&kaluza(&["--help"])), 0);
}

#[test]
fn malformed_problem_is_a_usage_error() {
    let path = scratch("malformed.json");
    std::fs::write(&path, r#"{"algebra": {"builtin": "su2", "n": 2}, "extra": 1"#).unwrap();
    assert_eq!(code(&kaluza(&["validate", "--input", path.to_str().unwrap()])), 64);
}

#[test]
fn identities_dimension_range() {
    assert_eq!(code(&kaluza(&["identities", "--dim", "2"])), 64);
    let o = kaluza(&["identities", "--dim", "3", "--trials", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&o)["passed"], true);
}

#[test]
fn curvature_of_flat_base_with_su2_fiber() {
    let o = kaluza(&["curvature", "--input", &problem("flat_su2.json")]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    let points = r["data"]["points"].as_array().unwrap();
    assert_eq!(points.len(), 2);
    for p in points {
        assert!((p["R"].as_f64().unwrap() - 1.5).abs() < 1e-12, "{p}");
    }
}

#[test]
fn csv_output() {
    let o = kaluza(&["curvature", "--input", &problem("flat_su2.json"), "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "index,x1,x2,R,einstein_norm,ym_norm,cross_check");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("1.5")));
}

#[test]
fn out_flag_writes_file() {
    let path = scratch("lift_report.json");
    let _ = std::fs::remove_file(&path);
    let o = kaluza(&["lift", "--input", &problem("lift_su2.json"), "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["command"], "lift");
    assert_eq!(r["passed"], true);
}

#[test]
fn gauge_check_passes_on_standard_problem() {
    let o = kaluza(&["gauge-check", "--input", &problem("su2_standard.json"), "--trials", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn jobs_from_environment_do_not_change_results() {
    let input = problem("su2_standard.json");
    let run = |jobs: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_kaluza"))
            .args(["curvature", "--input", &input])
            .env("KK_JOBS", jobs)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        report(&o)
    };
    let (mut one, mut eight) = (run("1"), run("8"));
    assert_eq!(one["runtime"]["jobs"], 1);
    assert_eq!(eight["runtime"]["jobs"], 8);
    one.as_object_mut().unwrap().remove("runtime");
    eight.as_object_mut().unwrap().remove("runtime");
    assert_eq!(one, eight);
}

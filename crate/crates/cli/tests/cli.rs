use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn nodal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nodal"))
        .args(args)
        .env_remove("NODAL_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn csv_rows(out: &Output) -> (String, Vec<Vec<f64>>) {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn diamond_counts_for_all_k() {
    let path = fixture("diamond.json");
    let out = nodal(&["nodal", "--input", path.to_str().unwrap(), "--k", "all"]);
    assert_eq!(out.status.code(), Some(0));
    let json = stdout_json(&out);
    let reports = json["reports"].as_array().unwrap();
    let counts: Vec<(u64, i64)> = reports
        .iter()
        .map(|r| (r["nodal_count"].as_u64().unwrap(), r["surplus"].as_i64().unwrap()))
        .collect();
    assert_eq!(counts, vec![(1, 1), (1, 0), (3, 1), (4, 1)]);
    assert!(reports.iter().all(|r| r["theorem_holds"] == Value::Bool(true)));
    assert!(json["skipped"].as_array().unwrap().is_empty());
}

#[test]
fn single_k_selects_one_report() {
    let path = fixture("diamond.json");
    let out = nodal(&["nodal", "--input", path.to_str().unwrap(), "--k", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let reports = stdout_json(&out)["reports"].as_array().unwrap().clone();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["k"], 3);
    assert_eq!(reports[0]["nodal_count"], 3);
}

#[test]
fn tree_has_zero_surplus() {
    let path = fixture("tree.json");
    let out = nodal(&["verify", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let json = stdout_json(&out);
    for v in json["verifications"].as_array().unwrap() {
        assert_eq!(v["report"]["surplus"], 0);
        assert_eq!(v["consistent"], Value::Bool(true));
    }
}

#[test]
fn magnetic_agrees_with_finite_differences() {
    let path = fixture("diamond.json");
    let out = nodal(&["magnetic", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    for r in stdout_json(&out)["reports"].as_array().unwrap() {
        assert_eq!(r["fd_agrees"], Value::Bool(true));
        assert_eq!(r["morse"]["agree"], Value::Bool(true));
    }
}

#[test]
fn non_simple_eigenvalues_are_skipped_with_exit_two() {
    let path = fixture("c5_laplacian.json");
    let out = nodal(&["nodal", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let json = stdout_json(&out);
    assert_eq!(json["reports"].as_array().unwrap().len(), 1);
    assert_eq!(json["skipped"].as_array().unwrap().len(), 4);
}

#[test]
fn malformed_input_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"graph": {"n": 2, "edges": [[0, "one"]]}, "matrix": [[0, 1], [1, 0]]}"#)
        .unwrap();
    let out = nodal(&["nodal", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("graph.edges"), "{err}");
}

#[test]
fn unsupported_matrix_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"graph": {"n": 2, "edges": [[0, 1]]}, "matrix": [[0, 0], [0, 0]]}"#).unwrap();
    let out = nodal(&["nodal", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn small_surface_has_exact_header() {
    let path = fixture("diamond.json");
    let out = nodal(&["surface", "--input", path.to_str().unwrap(), "--grid", "2x2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv_rows(&out);
    assert_eq!(
        header,
        "flux_1,flux_2,lambda_1,lambda_2,lambda_3,lambda_4,degenerate_flag,quadratic_model"
    );
    assert_eq!(rows.len(), 4);
}

#[test]
fn diamond_second_eigenvalue_is_minimal_at_zero_flux() {
    let path = fixture("diamond.json");
    let out = nodal(&["surface", "--input", path.to_str().unwrap(), "--k", "2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let (_, rows) = csv_rows(&out);
    assert_eq!(rows.len(), 41 * 41);
    let lambda_2 = |r: &Vec<f64>| r[3];
    let centre = rows.iter().find(|r| r[0] == 0.0 && r[1] == 0.0).expect("grid contains the origin");
    assert!(rows.iter().all(|r| lambda_2(r) >= lambda_2(centre) - 1e-12));
}

#[test]
fn pentagon_surface_matches_closed_form() {
    let path = fixture("c5_laplacian.json");
    let out = nodal(&[
        "surface", "--input", path.to_str().unwrap(), "--grid", "25", "--range", "-3:3", "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let (_, rows) = csv_rows(&out);
    assert_eq!(rows.len(), 25);
    for r in rows {
        let closed = 2.0 - 2.0 * (r[0] / 5.0).cos();
        assert!((r[1] - closed).abs() < 1e-10, "flux {}: {} vs {closed}", r[0], r[1]);
    }
}

#[test]
fn kuramoto_example_reports_stable_points() {
    let path = fixture("kuramoto_example.json");
    let out = nodal(&["kuramoto", "--input", path.to_str().unwrap(), "--starts", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    let json = stdout_json(&out);
    let verdicts = json["verdicts"].as_array().unwrap();
    assert!(!verdicts.is_empty());
    assert!(verdicts.iter().all(|v| v["theorem_holds"] == Value::Bool(true)));
    let stable = verdicts.iter().filter(|v| v["stable_mod_symmetry"] == Value::Bool(true)).count();
    assert_eq!(json["n_stable"].as_u64().unwrap() as usize, stable);
}

#[test]
fn selftest_default_passes() {
    let out = nodal(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn injected_fault_is_caught_with_a_fixture() {
    let out = nodal(&["selftest", "--instances", "20", "--suite", "nodal-identity", "--inject-fault", "0"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    let fixture_line = err.lines().find(|l| l.starts_with('{')).expect("fixture on stderr");
    let fixture: Value = serde_json::from_str(fixture_line).unwrap();
    assert!(fixture.get("matrix").is_some(), "{fixture}");
}

#[test]
fn selftest_is_deterministic_in_seed() {
    let a = nodal(&["selftest", "--instances", "30", "--seed", "7"]);
    let b = nodal(&["selftest", "--instances", "30", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout_json(&a)["seed"], 7);
}

#[test]
fn seed_environment_variable_overrides_flag() {
    let out = Command::new(env!("CARGO_BIN_EXE_nodal"))
        .args(["selftest", "--instances", "10", "--seed", "1"])
        .env("NODAL_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["seed"], 99);
}

#[test]
fn output_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out.json");
    let path = fixture("figure_eight.json");
    let out = nodal(&["verify", "--input", path.to_str().unwrap(), "--output", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&target).unwrap();
    let json: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["verifications"].as_array().unwrap().len(), 8);
    let again: Value = serde_json::from_str(&serde_json::to_string(&json).unwrap()).unwrap();
    assert_eq!(json, again);
}

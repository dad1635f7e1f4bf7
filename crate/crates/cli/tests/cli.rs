use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mindiag::operator_core::GammaFamily;
use serde_json::{json, Value};
use tempfile::TempDir;

fn mindiag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mindiag"))
        .args(args)
        .env_remove("MINDIAG_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write_matrix(dir: &Path, name: &str, rows: &[Vec<f64>]) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json!({ "n": rows.len(), "entries": rows }).to_string()).unwrap();
    p
}

fn exchange(dir: &Path) -> PathBuf {
    write_matrix(dir, "exchange.json", &[vec![0.0, 1.0], vec![1.0, 0.0]])
}

fn orthogonal_columns(dir: &Path) -> PathBuf {
    write_matrix(dir, "oc.json", &[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 0.5], vec![1.0, 0.5, 0.0]])
}

fn gen_file(dir: &Path, variant: &str, n: usize) -> PathBuf {
    let p = dir.join(format!("{variant}_{n}.json"));
    let o = mindiag(&["gen", "--gamma", "0.5", "--n", &n.to_string(), "--variant", variant, "--out", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn as_f64s(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn gen_writes_family_entries_and_tail_bound() {
    let o = mindiag(&["gen", "--gamma", "0.5", "--n", "3", "--variant", "T"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["entries"], json!([[0.0, 0.5, 0.25], [0.5, 0.0, 0.5], [0.25, 0.5, 0.0]]));
    assert_eq!(v["metadata"]["variant"], "T");
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("tail bound"), "{stderr}");
}

#[test]
fn gen_rejects_bad_flags_with_usage_code() {
    assert_eq!(code(&mindiag(&["gen", "--gamma", "0", "--n", "3"])), 2);
    assert_eq!(code(&mindiag(&["gen", "--gamma", "1.5", "--n", "3"])), 2);
    assert_eq!(code(&mindiag(&["gen", "--gamma", "0.5", "--n", "0"])), 2);
    assert_eq!(code(&mindiag(&["gen", "--gamma", "0.5", "--n", "3", "--variant", "nope"])), 2);
    assert_eq!(code(&mindiag(&["gen", "--n", "3"])), 2);
    assert_eq!(code(&mindiag(&["frobnicate"])), 2);
}

#[test]
fn gen_tr_plus_d_diagonal_is_the_sequence() {
    let dir = TempDir::new().unwrap();
    let p = gen_file(dir.path(), "TrPlusD", 80);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    let d = GammaFamily::new(0.5).unwrap().d_sequence(80).unwrap();
    for (k, want) in d.as_slice().iter().enumerate() {
        assert_eq!(v["entries"][k][k].as_f64().unwrap(), *want, "k = {k}");
    }
}

#[test]
fn approx_exchange() {
    let dir = TempDir::new().unwrap();
    let o = mindiag(&["approx", "--input", s(&exchange(dir.path()))]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert!((v["upper"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v["gap"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["status"], "converged");
}

#[test]
fn approx_orthogonal_columns() {
    let dir = TempDir::new().unwrap();
    let o = mindiag(&["approx", "--input", s(&orthogonal_columns(dir.path()))]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert!((v["upper"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-9);
    let d = as_f64s(&v["d_star"]);
    for (x, want) in d.iter().zip([0.0, -0.5, -0.5]) {
        assert!((x - want).abs() < 1e-6, "{d:?}");
    }
}

#[test]
fn approx_scaled_family_matches_column_norm() {
    let dir = TempDir::new().unwrap();
    let p = gen_file(dir.path(), "Tr", 80);
    let o = mindiag(&["approx", "--input", s(&p)]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    let rf = GammaFamily::new(0.5).unwrap().r_factor(80).unwrap();
    let want = rf.r * rf.column_norm;
    let upper = v["upper"].as_f64().unwrap();
    assert!((upper - want).abs() <= 1e-6 * want, "{upper} vs {want}");
    assert!(v["gap"].as_f64().unwrap() <= 1e-6 * upper);
}

#[test]
fn approx_load_failures() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&mindiag(&["approx", "--input", s(&missing)])), 3);
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "not json").unwrap();
    assert_eq!(code(&mindiag(&["approx", "--input", s(&garbage)])), 3);
    let asym = write_matrix(dir.path(), "asym.json", &[vec![0.0, 1.0], vec![2.0, 0.0]]);
    assert_eq!(code(&mindiag(&["approx", "--input", s(&asym)])), 3);
}

fn wavy(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| ((3 * i * j + 7 * (i + j)) as f64).sin()).collect())
        .collect()
}

#[test]
fn approx_iteration_cap_still_writes_report() {
    let dir = TempDir::new().unwrap();
    let p = write_matrix(dir.path(), "wavy.json", &wavy(8));
    let out = dir.path().join("report.json");
    let o = mindiag(&["approx", "--input", s(&p), "--max-iters", "1", "--multistart", "1", "--out", s(&out)]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["status"], "iter_cap");
    // the same instance converges with the default budget
    assert_eq!(code(&mindiag(&["approx", "--input", s(&p)])), 0);
}

#[test]
fn approx_rejects_bad_tolerance() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&mindiag(&["approx", "--input", s(&exchange(dir.path())), "--tol", "0"])), 2);
}

#[test]
fn certify_verdicts() {
    let dir = TempDir::new().unwrap();
    let v = stdout_json(&mindiag(&["certify", "--input", s(&exchange(dir.path()))]));
    assert_eq!(v["verdict"], "minimal");
    assert!(v["report"]["balance"]["residual"].as_f64().unwrap() < 1e-12);

    let d = write_matrix(dir.path(), "diag.json", &[vec![2.0, 0.0], vec![0.0, 1.0]]);
    let o = mindiag(&["certify", "--input", s(&d)]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["verdict"], "not minimal");
    assert_eq!(v["report"]["balance"]["balanced"], false);
}

#[test]
fn certify_headline_family_member() {
    let dir = TempDir::new().unwrap();
    let p = gen_file(dir.path(), "TrPlusD", 80);
    let o = mindiag(&["certify", "--input", s(&p), "--tol", "1e-6"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["verdict"], "minimal");
    assert_eq!(v["certificate_attains_norm"], true);
    assert_eq!(v["balanced_and_hulls_meet"], true);
}

#[test]
fn certify_accepts_solver_diagonal_and_column_hypotheses() {
    let dir = TempDir::new().unwrap();
    let input = orthogonal_columns(dir.path());
    let report = dir.path().join("approx.json");
    assert_eq!(code(&mindiag(&["approx", "--input", s(&input), "--out", s(&report)])), 0);
    let o = mindiag(&["certify", "--input", s(&input), "--diag", s(&report), "--i0", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["verdict"], "minimal");
    assert_eq!(v["report"]["caso3"]["hyp4_holds"], true);

    let plain = dir.path().join("d.json");
    std::fs::write(&plain, r#"{"d": [0.0, 0.0]}"#).unwrap();
    assert_eq!(code(&mindiag(&["certify", "--input", s(&input), "--diag", s(&plain)])), 3);
    assert_eq!(code(&mindiag(&["certify", "--input", s(&input), "--i0", "0"])), 2);
}

#[test]
fn certify_zero_matrix_is_degenerate() {
    let dir = TempDir::new().unwrap();
    let z = write_matrix(dir.path(), "zero.json", &[vec![0.0, 0.0], vec![0.0, 0.0]]);
    let o = mindiag(&["certify", "--input", s(&z)]);
    assert_eq!(code(&o), 5);
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));
}

#[test]
fn sweep_table_properties() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = mindiag(&[
        "sweep", "--gamma", "0.5", "--n-list", "20,40,80", "--track-diag", "10", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["n", "upper", "lower", "gap", "lambda_sum_residual", "d_10"]);
    let rows: Vec<Vec<f64>> =
        rdr.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    for w in rows.windows(2) {
        assert!(w[1][1] >= w[0][1] - 1e-9, "upper decreased: {} then {}", w[0][1], w[1][1]);
    }
    for r in &rows {
        assert!(r[3] <= 1e-4 * r[1], "gap {} at n = {}", r[3], r[0]);
    }
    // the tracked entry settles on the closed-form d_10, itself within 1e-2
    // of the limit 1/(γ − 1) = −2
    let exact = GammaFamily::new(0.5).unwrap().d_sequence(80).unwrap().as_slice()[9];
    let miss: Vec<f64> = rows.iter().map(|r| (r[5] - exact).abs()).collect();
    assert!(miss[2] <= miss[0] && miss[2] < 1e-6, "d_10 misses {exact} by {miss:?}");
    assert!((exact + 2.0).abs() < 1e-2);
}

#[test]
fn sweep_rejects_zero_based_track_index() {
    assert_eq!(code(&mindiag(&["sweep", "--gamma", "0.5", "--n-list", "5", "--track-diag", "0"])), 2);
    assert_eq!(code(&mindiag(&["sweep", "--gamma", "2", "--n-list", "5"])), 2);
}

#[test]
fn sweep_output_independent_of_jobs() {
    let one = mindiag(&["sweep", "--gamma", "0.5", "--n-list", "6,9,12", "--track-diag", "2,11", "--jobs", "1"]);
    let two = mindiag(&["sweep", "--gamma", "0.5", "--n-list", "6,9,12", "--track-diag", "2,11", "--jobs", "3"]);
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, two.stdout);
    // column for entry 11 is empty where the truncation is shorter
    let text = String::from_utf8(one.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with(','), "{text}");
}

#[test]
fn oracle_examples_and_size_limit() {
    let dir = TempDir::new().unwrap();
    let v = stdout_json(&mindiag(&["oracle", "--input", s(&exchange(dir.path()))]));
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-4);
    let v = stdout_json(&mindiag(&["oracle", "--input", s(&orthogonal_columns(dir.path()))]));
    let value = v["value"].as_f64().unwrap();
    assert!(value >= 2f64.sqrt() - 1e-9 && value <= 2f64.sqrt() + 1e-3);
    let big = gen_file(dir.path(), "T", 5);
    assert_eq!(code(&mindiag(&["oracle", "--input", s(&big)])), 6);
}

#[test]
fn reports_are_byte_identical_and_echo_flags() {
    let dir = TempDir::new().unwrap();
    let p = write_matrix(dir.path(), "wavy.json", &wavy(6));
    let a = mindiag(&["approx", "--input", s(&p), "--seed", "11"]);
    let b = mindiag(&["approx", "--input", s(&p), "--seed", "11"]);
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    assert_eq!(v["flags"]["solve"]["seed"], 11);

    let env = Command::new(env!("CARGO_BIN_EXE_mindiag"))
        .args(["approx", "--input", s(&p)])
        .env("MINDIAG_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(env.stdout, a.stdout);
}

#[test]
fn pretty_output_is_the_same_report() {
    let dir = TempDir::new().unwrap();
    let p = exchange(dir.path());
    let plain = stdout_json(&mindiag(&["approx", "--input", s(&p)]));
    let o = mindiag(&["approx", "--input", s(&p), "--pretty"]);
    let mut pretty = stdout_json(&o);
    pretty["flags"]["output"]["pretty"] = json!(false);
    assert_eq!(plain, pretty);
    assert!(!o.stderr.is_empty());
}

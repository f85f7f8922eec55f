use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_lpbound")).args(args).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    let json = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), json, String::from_utf8_lossy(&out.stderr).to_string())
}

fn write_csv(dir: &Path, name: &str, header: &str, rows: &[(u64, u64)]) {
    let mut s = format!("{header}\n");
    for (a, b) in rows {
        s.push_str(&format!("{a},{b}\n"));
    }
    fs::write(dir.join(format!("{name}.csv")), s).unwrap();
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn triangle_data() -> TempDir {
    let dir = TempDir::new().unwrap();
    let edges: Vec<(u64, u64)> = (0..30).map(|i| (i % 7, (i * 3 + 1) % 11)).collect();
    for name in ["R", "S", "T"] {
        write_csv(dir.path(), name, "a,b", &edges);
    }
    dir
}

fn as_f64(v: &Value) -> f64 {
    match v {
        Value::Number(n) => n.as_f64().unwrap(),
        Value::String(s) if s.contains('/') => {
            let (a, b) = s.split_once('/').unwrap();
            a.parse::<f64>().unwrap() / b.parse::<f64>().unwrap()
        }
        Value::String(s) => s.parse().unwrap(),
        _ => panic!("not a number: {v}"),
    }
}

#[test]
fn stats_auto_gathers_simple_conditionals() {
    let data = triangle_data();
    let q = fixture("triangle.query");
    let (code, json, _) = run(&["stats", "--query", q.to_str().unwrap(), "--data", data.path().to_str().unwrap(), "--auto", "1,2,inf"]);
    assert_eq!(code, 0);
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["statistics"].as_array().unwrap().len(), 21);
}

#[test]
fn stats_with_empty_spec_and_missing_relation() {
    let data = triangle_data();
    let q = fixture("triangle.query");
    let spec = write(data.path(), "spec.json", "[]");
    let (code, json, _) = run(&["stats", "--query", q.to_str().unwrap(), "--data", data.path().to_str().unwrap(), "--spec", &spec]);
    assert_eq!(code, 0);
    assert_eq!(json["statistics"], Value::Array(vec![]));

    fs::remove_file(data.path().join("S.csv")).unwrap();
    let (code, _, err) = run(&["stats", "--query", q.to_str().unwrap(), "--data", data.path().to_str().unwrap(), "--auto", "1"]);
    assert_eq!(code, 1);
    assert!(err.contains("missing relation S"), "{err}");
}

#[test]
fn bound_exit_codes_and_report() {
    let dir = TempDir::new().unwrap();
    let q = fixture("triangle.query");
    let empty = write(dir.path(), "empty.json", "[]");
    let (code, json, _) = run(&["bound", "--query", q.to_str().unwrap(), "--stats", &empty]);
    assert_eq!(code, 2);
    assert_eq!(json["status"], "unbounded");

    let stats = write(
        dir.path(),
        "l1.json",
        r#"[{"atom":0,"U":[],"V":["X","Y"],"p":1,"B":1024},
            {"atom":1,"U":[],"V":["Y","Z"],"p":1,"B":1024},
            {"atom":2,"U":[],"V":["Z","X"],"p":1,"b":10}]"#,
    );
    let (code, json, _) = run(&["bound", "--query", q.to_str().unwrap(), "--stats", &stats, "--certificate"]);
    assert_eq!(code, 0);
    assert_eq!(json["log2_bound"], 15);
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["certificate"].as_array().unwrap().len(), 3);
    assert_eq!(as_f64(&json["certificate"][0]["weight"]), 0.5);
    assert!(json["optimum"].is_object());
}

#[test]
fn bound_rejects_unguarded_statistics() {
    let dir = TempDir::new().unwrap();
    let q = fixture("triangle.query");
    let stats = write(dir.path(), "bad.json", r#"[{"atom":0,"U":["Z"],"V":["X"],"p":2,"b":3}]"#);
    let (code, _, err) = run(&["bound", "--query", q.to_str().unwrap(), "--stats", &stats]);
    assert_eq!(code, 1);
    assert!(err.contains("unguarded"), "{err}");
}

#[test]
fn compare_on_diagonal_self_join_is_exact() {
    let dir = TempDir::new().unwrap();
    let q = write(dir.path(), "q.query", "Q(X,Y,Z) :- R(X,Y), R(Z,Y).");
    let rows: Vec<(u64, u64)> = (0..200).map(|i| (i, i)).collect();
    write_csv(dir.path(), "R", "x,y", &rows);
    let (code, json, _) = run(&["compare", "--query", &q, "--data", dir.path().to_str().unwrap(), "--presets", "2;agm", "--true-count"]);
    assert_eq!(code, 0);
    assert_eq!(json["true_count"], 200);
    let ratio = as_f64(&json["rows"][0]["ratio"]);
    assert!((ratio - 1.0).abs() < 1e-9, "{ratio}");
    assert!(as_f64(&json["rows"][1]["ratio"]) >= 1.0);
}

#[test]
fn compare_path_query_more_norms_beat_panda() {
    let dir = TempDir::new().unwrap();
    let q = write(dir.path(), "q.query", "Q(A,B,C,D) :- R(A,B), S(B,C), T(C,D).");
    let rows: Vec<(u64, u64)> = (0..120u64).map(|i| ((i * i) % 17, (i * 7) % 13)).collect();
    for name in ["R", "S", "T"] {
        write_csv(dir.path(), name, "u,v", &rows);
    }
    let (code, json, _) =
        run(&["compare", "--query", &q, "--data", dir.path().to_str().unwrap(), "--presets", "1..3,inf;panda", "--true-count"]);
    assert_eq!(code, 0);
    let lp = as_f64(&json["rows"][0]["ratio"]);
    let panda = as_f64(&json["rows"][1]["ratio"]);
    assert!(lp >= 1.0 - 1e-9 && lp <= panda * (1.0 + 1e-9), "{lp} vs {panda}");
}

#[test]
fn evaluate_engines_agree() {
    let data = triangle_data();
    let q = fixture("triangle.query");
    let mut counts = Vec::new();
    for engine in ["oracle", "generic", "partitioned"] {
        let (code, json, err) =
            run(&["evaluate", "--query", q.to_str().unwrap(), "--data", data.path().to_str().unwrap(), "--engine", engine]);
        assert_eq!(code, 0, "{err}");
        assert_eq!(json["engine"], engine);
        counts.push(json["count"].clone());
        assert_eq!(json["tuples"].as_array().unwrap().len() as u64, json["count"].as_u64().unwrap());
    }
    assert!(counts.windows(2).all(|w| w[0] == w[1]));
    let out = data.path().join("out.csv");
    let (code, json, _) = run(&[
        "evaluate",
        "--query",
        q.to_str().unwrap(),
        "--data",
        data.path().to_str().unwrap(),
        "--emit-count-only",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(json.get("tuples").is_none());
    let lines = fs::read_to_string(out).unwrap().lines().count() as u64;
    assert_eq!(lines, json["count"].as_u64().unwrap() + 1);
}

#[test]
fn worstcase_exports_database_and_report() {
    let dir = TempDir::new().unwrap();
    let q = write(dir.path(), "q.query", "Q(X,Y,Z) :- R1(X,Y), R2(Y,Z), R3(Z,X), S1(X), S2(Y), S3(Z).");
    let stats = write(
        dir.path(),
        "s.json",
        r#"[{"atom":0,"U":["X"],"V":["Y"],"p":4,"b":2},
            {"atom":1,"U":["Y"],"V":["Z"],"p":4,"b":2},
            {"atom":2,"U":["Z"],"V":["X"],"p":4,"b":2},
            {"atom":3,"U":[],"V":["X"],"p":1,"b":8},
            {"atom":4,"U":[],"V":["Y"],"p":1,"b":8},
            {"atom":5,"U":[],"V":["Z"],"p":1,"b":8}]"#,
    );
    let out = dir.path().join("wc");
    let (code, json, err) = run(&["worstcase", "--query", &q, "--stats", &stats, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(json["output_size"], 256);
    assert_eq!(json["satisfied"], true);
    assert_eq!(json["c"], 1);
    assert!(as_f64(&json["gap_log2"]).abs() < 1e-12);
    for name in ["R1", "R2", "R3", "S1", "S2", "S3"] {
        assert!(out.join(format!("{name}.csv")).is_file());
    }
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["bound"], 8);
}

#[test]
fn convert_round_trips_and_rejects() {
    let dir = TempDir::new().unwrap();
    let seq = write(dir.path(), "d.json", "[5, 3, 3, 1]");
    let (code, json, _) = run(&["convert", "--to", "power-sums", &seq]);
    assert_eq!(code, 0);
    let sums = write(dir.path(), "p.json", &json["power_sums"].to_string());
    let (code, json, _) = run(&["convert", "--to", "sequence", &sums]);
    assert_eq!(code, 0);
    assert_eq!(json["sequence"], serde_json::json!([5, 3, 3, 1]));
    let bad = write(dir.path(), "bad.json", "[1, 5]");
    let (code, _, _) = run(&["convert", "--to", "sequence", &bad]);
    assert_eq!(code, 1);
}

#[test]
fn check_ineq_reports_cone_dependence() {
    let dir = TempDir::new().unwrap();
    let ineq = write(
        dir.path(),
        "i.json",
        r#"{"variables":["U","V"],
            "terms":[{"U":["V"],"V":["U"],"p":2,"weight":"2/3"},{"U":["U"],"V":["V"],"p":2,"weight":"2/3"}],
            "rhs":1}"#,
    );
    let (code, json, _) = run(&["check-ineq", &ineq, "--cone", "modular"]);
    assert_eq!(code, 0);
    assert_eq!(json["valid"], true);
    let (code, json, _) = run(&["check-ineq", &ineq, "--cone", "gamma"]);
    assert_eq!(code, 0);
    assert_eq!(json["valid"], false);
    assert!(as_f64(&json["lhs_minus_rhs"]) < 0.0);
    assert!(json["counterexample"].is_object());
}

#[test]
fn text_and_jsonl_formats() {
    let dir = TempDir::new().unwrap();
    let seq = write(dir.path(), "d.json", "[2, 1]");
    let out = Command::new(env!("CARGO_BIN_EXE_lpbound")).args(["--format", "jsonl", "convert", "--to", "power-sums", &seq]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    let out = Command::new(env!("CARGO_BIN_EXE_lpbound")).args(["--format", "text", "convert", "--to", "power-sums", &seq]).output().unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "[3,5]");
}

use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run(dir: &Path, problem: &str, cmd: &str, extra: &[&str]) -> (i32, String) {
    let file = dir.join("problem.json");
    std::fs::write(&file, problem).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hamsfl"))
        .arg("--problem")
        .arg(&file)
        .arg("--out")
        .arg(dir.join("out"))
        .args(["--cmd", cmd])
        .args(extra)
        .output()
        .unwrap();
    let text = format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    (out.status.code().unwrap(), text)
}

fn read_json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

const RAMP: &str = r#"{"n":1,"family":{"builtin":"scalar_ramp"},"lambda_minus":0.3,"lambda_plus":1.5}"#;
const WIGGLE: &str = r#"{"n":1,"family":{"builtin":"wiggle"},"lambda_minus":0.0,"lambda_plus":0.5}"#;

#[test]
fn analyze_ramp_reports_part_i() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run(dir.path(), RAMP, "analyze", &[]);
    assert_eq!(code, 0, "{out}");
    let text = std::fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    assert!(text.contains("\"delta_beta_minus_alpha_plus\": 1"), "{text}");
    let report: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["verdict_i"]["status"], "established");
    assert_eq!(report["verdict_ii"]["status"], "hypotheses-violated");
    assert!(!text.contains("null"));
}

#[test]
fn sfl_on_wiggle_gives_the_sandwich() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run(dir.path(), WIGGLE, "sfl", &[]);
    assert_eq!(code, 0, "{out}");
    let v = read_json(dir.path(), "sfl.json");
    for (key, want) in [("sfl_L", 1), ("sfl_M", 0), ("sfl_N", 2), ("K", 8), ("K_check", 13)] {
        assert_eq!(v[key], want, "{key}");
    }
}

#[test]
fn truncation_flag_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run(dir.path(), WIGGLE, "sfl", &["--K", "6"]);
    assert_eq!(code, 0, "{out}");
    let v = read_json(dir.path(), "sfl.json");
    assert_eq!((v["K"].as_i64(), v["K_check"].as_i64()), (Some(6), Some(11)));
}

#[test]
fn continue_quartic_follows_the_analytic_branch() {
    let dir = tempfile::tempdir().unwrap();
    let problem = r#"{"n":1,"family":{"builtin":"quartic"},"lambda_minus":0.5,"lambda_plus":1.5,
        "continuation":{"lambda_star":[1.0]}}"#;
    let (code, out) = run(dir.path(), problem, "continue", &[]);
    assert_eq!(code, 0, "{out}");
    let csv = std::fs::read_to_string(dir.path().join("out/branch_0.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("step,lambda,amplitude,residual"));
    let mut rows = 0;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let r2 = f[2] * f[2] / std::f64::consts::TAU;
        assert!((f[1] - (1.0 - r2)).abs() <= 1e-6, "{line}");
        rows += 1;
    }
    assert!(rows > 10);
    let summary = read_json(dir.path(), "continue.json");
    assert_eq!(summary[0]["stop_label"], "unbounded amplitude");
}

#[test]
fn continue_finds_candidates_without_explicit_start() {
    let dir = tempfile::tempdir().unwrap();
    let problem = r#"{"n":1,"family":{"builtin":"quartic"},"lambda_minus":0.5,"lambda_plus":1.5,"grid":41}"#;
    let (code, out) = run(dir.path(), problem, "continue", &[]);
    assert_eq!(code, 0, "{out}");
    let summary = read_json(dir.path(), "continue.json");
    assert!((summary[0]["lambda_star"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn scans_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run(dir.path(), WIGGLE, "envelope", &["--grid", "11"]);
    assert_eq!(code, 0, "{out}");
    let csv = std::fs::read_to_string(dir.path().join("out/envelope.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);
    assert!(csv.starts_with("lambda,alpha,beta\n"));

    let (code, out) = run(dir.path(), RAMP, "monodromy", &["--grid", "13"]);
    assert_eq!(code, 0, "{out}");
    let csv = std::fs::read_to_string(dir.path().join("out/monodromy.csv")).unwrap();
    // lambda = 0.3 + 0.1 i hits the integer 1 at i = 7.
    let row: Vec<&str> = csv.lines().nth(8).unwrap().split(',').collect();
    assert_eq!(row[1], "2");
}

#[test]
fn parity_of_wiggle_is_odd() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run(dir.path(), WIGGLE, "parity", &[]);
    assert_eq!(code, 0, "{out}");
    let v = read_json(dir.path(), "parity.json");
    assert_eq!(v["status"], "computed");
    assert_eq!(v["parity"], 1);
}

#[test]
fn singular_endpoint_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let problem = r#"{"n":1,"family":{"builtin":"scalar_ramp"},"lambda_minus":1.0,"lambda_plus":1.5}"#;
    let (code, out) = run(dir.path(), problem, "analyze", &[]);
    assert_eq!(code, 2, "{out}");
    let report = read_json(dir.path(), "report.json");
    assert_eq!(report["sfl"]["status"], "skipped");
    let (code, _) = run(dir.path(), problem, "sfl", &[]);
    assert_eq!(code, 2);
}

#[test]
fn bad_problem_files_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run(dir.path(), &RAMP.replace("1.5", "0.1"), "analyze", &[]);
    assert_eq!(code, 1);
    assert!(out.contains("lambda_minus"), "{out}");
    let (code, out) = run(dir.path(), "{\"n\": 1,\n \"oops\"", "analyze", &[]);
    assert_eq!(code, 1);
    assert!(out.contains("line 2"), "{out}");
    let linear = r#"{"n":1,"family":{"builtin":"scalar_ramp"},"lambda_minus":0.5,"lambda_plus":1.5,
        "continuation":{"lambda_star":[1.0]}}"#;
    let (code, out) = run(dir.path(), linear, "continue", &[]);
    assert_eq!(code, 1);
    assert!(out.contains("no nonlinear gradient"), "{out}");
}

#[test]
fn relax_flag_changes_the_mode() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run(dir.path(), RAMP, "analyze", &["--relax-ii"]);
    assert_eq!(code, 0, "{out}");
    let report = read_json(dir.path(), "report.json");
    assert_eq!(report["verdict_iii"]["mode"], "condition-(Delta)-only");
    assert_eq!(report["relax_ii"], true);
}

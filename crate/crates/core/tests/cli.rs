mod common;

use std::process::{Command, Output};

fn mcvalue(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcvalue"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> String {
    common::data_path(name).display().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn value_prints_a_table() {
    let out = mcvalue(&["value", "--input", &data("three_atom.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("33.96226415"), "{text}");
    assert!(text.contains("66.03773585"), "{text}");
}

#[test]
fn json_report_to_stdout_and_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = mcvalue(&[
        "margin",
        "--input",
        &data("three_atom.json"),
        "--format",
        "json",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let printed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(printed, written);
    assert_eq!(written["best_estimate"].as_f64(), Some(120.0));
    assert_eq!(written["dividend_portfolio"].as_f64(), Some(-86.03773585));
    assert_eq!(written["meta"]["command"], "margin");
    assert!(written["max_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn validate_names_the_bad_nodes() {
    let out = mcvalue(&["validate", "--input", &data("broken_tree.json")]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out) + &stderr(&out);
    assert!(text.contains("'root'") && text.contains("0.99"), "{text}");
    assert!(text.contains("'up.up'"), "{text}");

    let ok = mcvalue(&["validate", "--input", &data("three_atom.json")]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn value_rejects_an_invalid_tree() {
    let out = mcvalue(&["value", "--input", &data("broken_tree.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("root"), "{}", stderr(&out));
}

#[test]
fn malformed_json_reports_the_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        &dir,
        "bad.json",
        "{\n  \"kind\": \"tree\",\n  \"risk\": {\"alpha\": 0.9,\n}",
    );
    let out = mcvalue(&["value", "--input", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line"), "{}", stderr(&out));
}

#[test]
fn missing_file_and_unknown_keys_are_validation_errors() {
    let out = mcvalue(&["value", "--input", "/nonexistent/tree.json"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        &dir,
        "extra.json",
        r#"{"kind": "tree", "risk": {"alpha": 0.9}, "dividend": {"eta": 0.06}, "colour": 1, "nodes": []}"#,
    );
    assert_eq!(mcvalue(&["value", "--input", &path]).status.code(), Some(2));
}

#[test]
fn overflowing_cash_flows_are_numerical_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        &dir,
        "huge.json",
        r#"{"kind": "tree", "curve": {"flat": 0}, "risk": {"alpha": 0.9}, "dividend": {"eta": 0.06},
            "nodes": [{"id": "r"}, {"id": "a", "parent": "r", "p": 0.5, "x": 1.5e308},
                      {"id": "b", "parent": "r", "p": 0.5, "x": -1.5e308}]}"#,
    );
    let out = mcvalue(&["value", "--input", &path]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("not finite"), "{}", stderr(&out));
}

#[test]
fn margin_needs_a_curve() {
    let out = mcvalue(&["margin", "--input", &data("two_year_rates.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("deterministic curve"));
    // the engine itself runs on node rates
    assert_eq!(
        mcvalue(&["value", "--input", &data("two_year_rates.json")])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        mcvalue(&["bounds", "--input", &data("two_year_rates.json")])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn oracle_requires_a_seed_and_repeats() {
    let missing = mcvalue(&["oracle", "--input", &data("three_atom.json")]);
    assert_eq!(missing.status.code(), Some(2));
    let args = [
        "oracle",
        "--input",
        &data("three_atom.json"),
        "--seed",
        "42",
        "--paths",
        "200000",
        "--format",
        "json",
    ];
    let a = mcvalue(&args);
    let b = mcvalue(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&b));
    let report: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(report["within_three_standard_errors"], true);
}

#[test]
fn example_reports_the_reversal_check() {
    let out = mcvalue(&["example", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["values"]["v0"].as_f64(), Some(214.431053));
    assert_eq!(report["proposition"]["reversal"], false);

    let low = mcvalue(&["example", "--eta", "0.0003"]);
    assert_eq!(low.status.code(), Some(0));
    assert!(
        stdout(&low)
            .to_lowercase()
            .contains("reversal v_0(l1) < v_0(l2): yes"),
        "{}",
        stdout(&low)
    );
}

#[test]
fn example_rejects_bad_levels() {
    assert_eq!(
        mcvalue(&["example", "--alpha", "1.5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        mcvalue(&["example", "--sigma", "-1", "50"]).status.code(),
        Some(2)
    );
}

#[test]
fn unwritable_output_path() {
    let out = mcvalue(&[
        "value",
        "--input",
        &data("three_atom.json"),
        "--output",
        "/nonexistent/dir/r.json",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

//! End-to-end checks of the `slowfast` binary: exit codes, stdout shapes,
//! and file output.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn slowfast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slowfast"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is utf-8")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is utf-8")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("slowfast-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).expect("temp dir");
    dir
}

#[test]
fn accuracy_table_prints_csv_with_header() {
    let out = slowfast(&["table1", "--k-min", "1", "--k-max", "1", "--phases", "8"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.starts_with("epsilon,rmse,sample_count,mean_signed_error,failures\n"),
        "{text}"
    );
    assert_eq!(text.lines().count(), 2, "{text}");
}

#[test]
fn single_run_reports_a_small_prediction_error() {
    let out = slowfast(&["single", "--epsilon", "0.001"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("epsilon,phi0,i0,"), "{header}");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let signed_error: f64 = row[5].parse().unwrap();
    assert!(signed_error.abs() < 0.01, "{signed_error}");

    let json_out = slowfast(&["single", "--epsilon", "0.001", "--format", "json"]);
    assert_eq!(json_out.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_str(&stdout(&json_out)).unwrap();
    assert!(value["xi_value"].is_number());
    assert_eq!(value["safe"], serde_json::Value::Bool(true));
}

#[test]
fn too_short_horizon_is_a_trajectory_failure() {
    let out = slowfast(&["single", "--epsilon", "0.001", "--horizon", "0.1"]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("error:"), "{}", stderr(&out));
}

#[test]
fn bad_flags_and_values_are_config_errors() {
    let unknown = slowfast(&["single", "--epsilon", "0.001", "--no-such-flag"]);
    assert_eq!(unknown.status.code(), Some(2));

    let negative = slowfast(&["single", "--epsilon=-1"]);
    assert_eq!(negative.status.code(), Some(2), "stderr: {}", stderr(&negative));

    let small_n = slowfast(&["uniformity", "--mode", "ensemble", "--n", "50", "--seed", "1"]);
    assert_eq!(small_n.status.code(), Some(2));
    assert!(stderr(&small_n).contains("invalid configuration"), "{}", stderr(&small_n));

    let bad_rungs = slowfast(&["table1", "--k-min", "3", "--k-max", "2"]);
    assert_eq!(bad_rungs.status.code(), Some(2));
}

#[test]
fn uniformity_summarizes_the_distribution() {
    let out = slowfast(&[
        "uniformity",
        "--mode",
        "ensemble",
        "--n",
        "100",
        "--seed",
        "3",
        "--epsilon",
        "0.001",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("n=100 used=100 dropped=0 ks="), "{text}");
    assert!(text.contains("expected=1.000000"), "{text}");
}

#[test]
fn analysis_text_covers_both_portrait_classes() {
    let plain = slowfast(&["analyze", "--at-resonance"]);
    assert_eq!(plain.status.code(), Some(0), "stderr: {}", stderr(&plain));
    let plain_text = stdout(&plain);
    assert!(plain_text.contains("no critical points"), "{plain_text}");
    assert!(plain_text.contains("all satisfied"), "{plain_text}");
    assert!(plain_text.contains("averaged crossing at tau* = "), "{plain_text}");

    let scaled = slowfast(&[
        "analyze",
        "--h1-scale",
        "2.0",
        "--y0",
        "0.5",
        "--x0",
        "1.0",
    ]);
    assert_eq!(scaled.status.code(), Some(0), "stderr: {}", stderr(&scaled));
    let scaled_text = stdout(&scaled);
    assert!(scaled_text.contains("2 critical points"), "{scaled_text}");
    assert!(scaled_text.contains("exclusion bands"), "{scaled_text}");
    assert!(scaled_text.contains("maximum at phi = 2.300523"), "{scaled_text}");
}

#[test]
fn out_flag_writes_files_with_companions() {
    let dir = temp_dir("out");
    let table_path = dir.join("table.csv");
    let out = slowfast(&[
        "table1",
        "--k-min",
        "1",
        "--k-max",
        "1",
        "--phases",
        "8",
        "--out",
        table_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("wrote "), "{}", stdout(&out));
    let table_text = fs::read_to_string(&table_path).unwrap();
    assert!(table_text.starts_with("epsilon,rmse,"), "{table_text}");
    let companion = fs::read_to_string(dir.join("table-loglog.dat")).unwrap();
    assert!(companion.starts_with("# ln(epsilon)"), "{companion}");

    let record_path = dir.join("run.json");
    let single = slowfast(&[
        "single",
        "--epsilon",
        "0.001",
        "--format",
        "json",
        "--out",
        record_path.to_str().unwrap(),
    ]);
    assert_eq!(single.status.code(), Some(0), "stderr: {}", stderr(&single));
    let value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&record_path).unwrap()).unwrap();
    assert!(value["h_drift"].as_f64().unwrap() < 1e-9);
    let _ = fs::remove_dir_all(&dir);
}

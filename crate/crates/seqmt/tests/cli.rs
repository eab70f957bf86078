//! End-to-end tests of the `seqmt` binary: output formats, exit codes and
//! the manifest sidecar.

use std::io::Write;
use std::process::{Command, Output, Stdio};

fn seqmt(args: &[&str], stdin: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_seqmt"));
    cmd.args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    let mut child = cmd.spawn().expect("spawn seqmt");
    if let Some(input) = stdin {
        child
            .stdin
            .as_mut()
            .unwrap()
            .write_all(input.as_bytes())
            .unwrap();
    }
    drop(child.stdin.take());
    child.wait_with_output().expect("collect output")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

// ---------------------------------------------------------------------------
// step
// ---------------------------------------------------------------------------

#[test]
fn step_streams_decisions_until_stop() {
    let out = seqmt(&["step"], Some("0.01 0.2\n0.015 0.9\n0.03\n"));
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "REJECT index=0 p=0.01 budget=0.04\nREJECT index=0 p=0.015 budget=0.025\nSTOP\n"
    );
}

#[test]
fn step_stops_immediately_when_budget_fails() {
    let out = seqmt(&["step"], Some("0.03 0.04\n"));
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "STOP\n");
}

#[test]
fn step_wp_variant_spends_more() {
    let out = seqmt(&["step", "--variant", "wp"], Some("0.01 0.2\n"));
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "REJECT index=0 p=0.01 budget=0.030000000000000002\n");
}

#[test]
fn step_exhausted_input_exits_cleanly() {
    let out = seqmt(&["step"], Some("0.01\n\n0.02\n"));
    assert_eq!(code(&out), 0);
    // Blank line is skipped; budget stays at alpha for singletons.
    assert_eq!(
        stdout(&out),
        "REJECT index=0 p=0.01 budget=0.05\nREJECT index=0 p=0.02 budget=0.05\n"
    );
}

#[test]
fn step_rejects_out_of_range_pvalue() {
    let out = seqmt(&["step"], Some("1.2\n"));
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 1"), "stderr: {}", stderr(&out));
}

#[test]
fn step_rejects_malformed_line_with_its_number() {
    let out = seqmt(&["step"], Some("0.01\nnot-a-number 0.2\n"));
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 2"), "stderr: {}", stderr(&out));
}

#[test]
fn step_rejects_bad_alpha() {
    let out = seqmt(&["step", "--alpha", "0"], Some(""));
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("alpha"));
}

// ---------------------------------------------------------------------------
// grid
// ---------------------------------------------------------------------------

#[test]
fn grid_single_treatment_csv() {
    let out = seqmt(
        &["grid", "--reps", "1000", "--sizes", "1", "--ptrue", "1.0"],
        None,
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "subfamily_size,p_true,max_false_pval,variant,n_reps,fwer_hat,fwer_se,mean_true_discoveries"
    );
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "1");
    assert_eq!(fields[3], "refined");
    assert_eq!(fields[4], "1000");
    let fwer: f64 = fields[5].parse().unwrap();
    // 3 sigma at n = 1000 around the exact FWER of 0.05.
    assert!((fwer - 0.05).abs() < 0.021, "fwer {fwer}");
    // The manifest goes to stderr when stdout carries the data.
    let manifest: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(manifest["command"], "grid");
    assert_eq!(manifest["seed"], 1);
}

#[test]
fn grid_both_variants_doubles_the_rows() {
    let out = seqmt(
        &[
            "grid",
            "--reps",
            "200",
            "--sizes",
            "1,10",
            "--ptrue",
            "0.5,1.0",
            "--variant",
            "both",
        ],
        None,
    );
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows[..4].iter().all(|r| r.contains(",refined,")));
    assert!(rows[4..].iter().all(|r| r.contains(",wp,")));
}

#[test]
fn grid_default_axes_with_both_variants_gives_80_rows() {
    let out = seqmt(&["grid", "--reps", "100", "--variant", "both"], None);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 81); // header + 40 + 40
}

#[test]
fn grid_json_rows_parse() {
    let out = seqmt(
        &[
            "grid", "--reps", "200", "--sizes", "2", "--ptrue", "0.5", "--format", "json",
        ],
        None,
    );
    assert_eq!(code(&out), 0);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let row = &rows.as_array().unwrap()[0];
    assert_eq!(row["subfamily_size"], 2);
    assert_eq!(row["variant"], "refined");
    assert!(row["fwer_hat"].as_f64().unwrap() >= 0.0);
}

#[test]
fn grid_rejects_out_of_range_alpha() {
    let out = seqmt(&["grid", "--alpha", "1.5", "--reps", "10"], None);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("alpha"));
}

#[test]
fn grid_rejects_bad_flag_value() {
    let out = seqmt(&["grid", "--reps", "ten"], None);
    assert_eq!(code(&out), 2);
}

#[test]
fn grid_reports_io_failure() {
    let out = seqmt(
        &[
            "grid",
            "--reps",
            "10",
            "--sizes",
            "1",
            "--ptrue",
            "0.5",
            "--out",
            "/nonexistent-dir/grid.csv",
        ],
        None,
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("I/O"));
}

#[test]
fn grid_writes_file_and_manifest_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.csv");
    let out = seqmt(
        &[
            "grid",
            "--reps",
            "500",
            "--sizes",
            "1",
            "--ptrue",
            "0.5",
            "--seed",
            "9",
            "--out",
            path.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&out), 0);
    let body = std::fs::read_to_string(&path).unwrap();
    assert!(body.starts_with("subfamily_size,"));

    let manifest_path = dir.path().join("grid.csv.manifest.json");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["command"], "grid");
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["config"]["reps"], 500);
    assert!(manifest["tool_version"].is_string());
    assert!(manifest["started"].is_string());
    assert!(manifest["finished"].is_string());
}

#[test]
fn grid_csv_floats_round_trip() {
    let out = seqmt(
        &["grid", "--reps", "1000", "--sizes", "3", "--ptrue", "0.7"],
        None,
    );
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    for idx in [1usize, 2, 5, 6, 7] {
        let value: f64 = fields[idx].parse().unwrap();
        // 17 significant digits reproduce the exact bits on re-format.
        assert_eq!(format!("{value:.16e}"), fields[idx]);
    }
}

// ---------------------------------------------------------------------------
// counterexample
// ---------------------------------------------------------------------------

#[test]
fn counterexample_text_report_contains_the_anchors() {
    let out = seqmt(&["counterexample"], None);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("0.024521"), "B-region mass missing:\n{text}");
    assert!(text.contains("0.047150"), "stage-two term missing:\n{text}");
    assert!(text.contains("0.071671"), "max-power bound missing:\n{text}");
    assert!(text.contains("0.064587"), "lower-tail FWER missing:\n{text}");
    for convention in ["doubled", "mintail", "lowertail"] {
        assert!(text.contains(convention), "{convention} missing:\n{text}");
    }
    // 13 rows in the stage-one table: heads 17 down to 5.
    let table_rows = text
        .lines()
        .filter(|l| {
            l.split_whitespace().count() == 3
                && l.trim_start().starts_with(|c: char| c.is_ascii_digit())
        })
        .count();
    assert_eq!(table_rows, 13, "unexpected table:\n{text}");
}

#[test]
fn counterexample_explicit_defaults_match_the_defaults() {
    let default_run = seqmt(&["counterexample"], None);
    let explicit = seqmt(&["counterexample", "--n1", "17", "--n2", "13"], None);
    assert_eq!(stdout(&default_run), stdout(&explicit));
}

#[test]
fn counterexample_mc_agrees_with_exact_in_json() {
    let out = seqmt(
        &[
            "counterexample",
            "--mc-reps",
            "200000",
            "--seed",
            "42",
            "--format",
            "json",
        ],
        None,
    );
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["n1"], 17);
    assert_eq!(doc["a_table"].as_array().unwrap().len(), 13);
    let conventions = doc["conventions"].as_array().unwrap();
    assert_eq!(conventions.len(), 3);
    for entry in conventions {
        let exact = entry["fwer_exact"].as_f64().unwrap();
        let mc = entry["fwer_mc"].as_f64().unwrap();
        let se = entry["fwer_mc_se"].as_f64().unwrap();
        assert_eq!(entry["mc_seed"], 42);
        assert!(
            (mc - exact).abs() <= 3.0 * se,
            "{}: mc {mc} vs exact {exact}",
            entry["convention"]
        );
    }
}

#[test]
fn counterexample_csv_long_format() {
    let out = seqmt(&["counterexample", "--format", "csv"], None);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("section,convention,k,value\n"));
    assert!(text.contains("\nexact_fwer,lowertail,,"));
    assert!(text.contains("\na_pvalue,,17,"));
    assert_eq!(text.lines().filter(|l| l.starts_with("a_pvalue")).count(), 13);
}

#[test]
fn counterexample_single_convention() {
    let out = seqmt(
        &["counterexample", "--c-convention", "lowertail", "--format", "json"],
        None,
    );
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let conventions = doc["conventions"].as_array().unwrap();
    assert_eq!(conventions.len(), 1);
    assert_eq!(conventions[0]["convention"], "lowertail");
    assert!(conventions[0].get("fwer_mc").is_none());
}

#[test]
fn counterexample_rejects_invalid_scenario() {
    let out = seqmt(&["counterexample", "--n1", "0"], None);
    assert_eq!(code(&out), 2);
    let out = seqmt(&["counterexample", "--n2", "65"], None);
    assert_eq!(code(&out), 2);
    let out = seqmt(&["counterexample", "--alpha", "1.5"], None);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = seqmt(&["frobnicate"], None);
    assert_eq!(code(&out), 2);
}

mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dnm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dnm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn synth_then_run_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let summary = json(&dnm(&["synth", path(&data), "--preset", "zero-noise", "--n", "30", "--k", "3", "--m", "2"]));
    assert_eq!(summary["files"].as_array().unwrap().len(), 4);

    let report_path = dir.path().join("report.json");
    let out = dnm(&["run", path(&data), "--k", "3", "--restarts", "5", "--output", path(&report_path)]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["mode"], "dnm");
    assert_eq!(report["optimizer"]["dims"], serde_json::json!([3, 3]));
    assert_eq!(report["metrics"]["best"]["acc"], 1.0);
    assert!(report["timings"]["total"].as_f64().unwrap() > 0.0);

    let report = json(&dnm(&["run", path(&data), "--k", "3", "--mode", "akkm", "--threads", "2"]));
    assert_eq!(report["mode"], "akkm");
    assert_eq!(report["metrics"]["best"]["acc"], 1.0);
}

#[test]
fn no_timings_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    assert!(dnm(&["synth", path(&data), "--preset", "noisy-blobs", "--seed", "3"]).status.success());
    let args = ["run", path(&data), "--k", "4", "--seed", "9", "--restarts", "8", "--no-timings"];
    let a = dnm(&args);
    let b = dnm(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(!text.contains("timings"));
    // Floats carry 17 significant digits.
    assert!(text.contains("\"final_penalty\": "));
    let acc_line = text.lines().find(|l| l.contains("\"acc\"")).unwrap();
    let mantissa = acc_line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    assert_eq!(mantissa.split('e').next().unwrap().replace(['.', '-'], "").len(), 17, "{acc_line}");
}

#[test]
fn synth_manifest_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    assert!(dnm(&["synth", path(&first), "--preset", "figure2", "--seed", "11", "--format", "csv"]).status.success());
    let manifest = first.join("manifest.json");
    assert!(dnm(&["synth", path(&second), "--manifest", path(&manifest), "--format", "csv"]).status.success());
    for f in ["view_00.csv", "view_01.csv", "labels.txt", "manifest.json"] {
        assert_eq!(std::fs::read(first.join(f)).unwrap(), std::fs::read(second.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn decompose_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("fig");
    assert!(dnm(&["synth", path(&data), "--preset", "figure2"]).status.success());
    let report = json(&dnm(&["decompose", path(&data), "--restarts", "5", "--heatmaps"]));
    assert_eq!(report["mode"], "decompose");
    assert_eq!(report["k"], 4);
    let views = report["views"].as_array().unwrap();
    assert_eq!(views.len(), 2);
    for key in ["tr_e", "tr_n", "tr_c", "tr_r", "min_eig_n", "max_eig_c", "lemma1_residual", "lemma2_residual"] {
        assert!(views[0][key].is_number(), "{key}");
    }
    assert_eq!(views[0]["heatmaps"]["null_space"].as_array().unwrap().len(), 120);
    let modes: Vec<&str> = report["denoise"].as_array().unwrap().iter().map(|d| d["mode"].as_str().unwrap()).collect();
    assert_eq!(modes, ["none", "remove_n", "remove_c", "remove_both"]);
}

#[test]
fn metrics_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.txt");
    let truth = dir.path().join("truth.txt");
    std::fs::write(&pred, "2\n2\n1\n1\n").unwrap();
    std::fs::write(&truth, "1\n1\n2\n2\n").unwrap();
    let report = json(&dnm(&["metrics", "--pred", path(&pred), "--truth", path(&truth)]));
    for key in ["acc", "nmi", "purity", "ari"] {
        assert_eq!(report[key], 1.0, "{key}");
    }
    std::fs::write(&pred, "1\n2\n").unwrap();
    assert_eq!(dnm(&["metrics", "--pred", path(&pred), "--truth", path(&truth)]).status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Input error: nothing to load.
    let out = dnm(&["run", path(dir.path()), "--k", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("view_"));

    // Input error: corrupt kernel file.
    let bad = dir.path().join("bad");
    std::fs::create_dir(&bad).unwrap();
    std::fs::write(bad.join("view_0.mkck"), b"MKCK\x01\x00\x00\x00\x03\x00\x00\x00").unwrap();
    assert_eq!(dnm(&["run", path(&bad), "--k", "2"]).status.code(), Some(2));

    // Infeasible: two views on disjoint coordinate subspaces.
    let disjoint = dir.path().join("disjoint");
    common::write_views(
        &disjoint,
        &[common::axis_projector(12, 0..3), common::axis_projector(12, 3..6)],
        None,
    );
    let out = dnm(&["run", path(&disjoint), "--k", "2", "--preprocess", "none"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("optimize stage"));

    // Numeric: kernel rank below k.
    let low = dir.path().join("low");
    common::write_views(&low, &[common::axis_projector(12, 0..1)], None);
    assert_eq!(dnm(&["run", path(&low), "--k", "2", "--preprocess", "none"]).status.code(), Some(3));

    // Usage errors come from the argument parser.
    assert_eq!(dnm(&["run", path(dir.path())]).status.code(), Some(2));
    assert!(dnm(&["--help"]).status.success());
}

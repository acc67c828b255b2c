use std::fs;
use std::path::Path;
use std::process::Command;

use dcsim::cli::run_command;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dcsim"))
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn out_arg(dir: &Path) -> String {
    dir.to_string_lossy().into_owned()
}

#[test]
fn closed_mzi_manifest_reports_certain_d1() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_command(["run", "mzi", "--closed", "--shots", "500", "--out", &out_arg(d.path())]), 0);
    let m = manifest(d.path());
    assert!((m["results"]["probabilities"]["detector"]["D1"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
    assert!(m["results"]["probabilities"]["detector"]["D2"].as_f64().unwrap().abs() <= 1e-12);
    assert!(m["wall_time_s"].as_f64().is_some());
}

#[test]
fn eraser_run_writes_marginals_and_visibility() {
    let d = tempfile::tempdir().unwrap();
    let code = run_command(["run", "eraser", "--eraser-in", "--shots", "4000", "--seed", "7", "--out", &out_arg(d.path())]);
    assert_eq!(code, 0);
    let m = manifest(d.path());
    for det in ["D1", "D2", "D3", "D4"] {
        let p = m["results"]["probabilities"]["detector"][det].as_f64().unwrap();
        assert!((p - 0.25).abs() < 1e-12);
        assert!(m["results"]["visibility"][det]["exact"]["visibility"].is_number());
    }
    let names: Vec<_> = m["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap().to_string()).collect();
    let mut dedup = names.clone();
    dedup.sort();
    dedup.dedup();
    assert_eq!(names.len(), dedup.len());
    for c in m["checks"].as_array().unwrap() {
        assert_eq!(c["pass"].as_bool().unwrap(), c["value"].as_f64().unwrap() <= c["tolerance"].as_f64().unwrap());
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (dir, fmt) in [(a.path(), "csv"), (b.path(), "csv")] {
        let code = run_command(["run", "eraser", "--shots", "3000", "--seed", "11", "--format", fmt, "--out", &out_arg(dir)]);
        assert_eq!(code, 0);
    }
    assert_eq!(data_files(a.path()), data_files(b.path()));
    let mut ma = manifest(a.path());
    let mut mb = manifest(b.path());
    for m in [&mut ma, &mut mb] {
        m.as_object_mut().unwrap().remove("wall_time_s");
        m.as_object_mut().unwrap().remove("command");
    }
    assert_eq!(ma, mb);
}

#[test]
fn csv_histogram_header() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_command(["run", "double-slit", "--shots", "200", "--format", "csv", "--out", &out_arg(d.path())]), 0);
    let text = fs::read_to_string(d.path().join("screen_exact.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "bin_index,sin_theta,count_or_prob");
    assert_eq!(lines.count(), 32);
}

#[test]
fn order_independence_check_passes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_command(["check", "order-independence", "--experiment", "epr", "--out", &out_arg(d.path())]), 0);
    let m = manifest(d.path());
    let c = &m["checks"][0];
    assert_eq!(c["name"], "order-independence");
    assert_eq!(c["value"].as_f64().unwrap(), 0.0);
    assert_eq!(c["pass"], true);
}

#[test]
fn other_checks_pass() {
    for args in [
        vec!["check", "delayed-invariance", "--experiment", "mzi"],
        vec!["check", "delayed-invariance", "--experiment", "eraser"],
        vec!["check", "no-signaling", "--experiment", "eraser"],
        vec!["check", "no-conflict", "--shots", "2000"],
        vec!["check", "semantics-agreement", "--experiment", "epr", "--shots", "2000"],
    ] {
        let d = tempfile::tempdir().unwrap();
        let o = out_arg(d.path());
        let mut a = args.clone();
        a.extend(["--out", o.as_str()]);
        assert_eq!(run_command(a), 0, "{args:?}");
    }
}

#[test]
fn dump_state_and_branches() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_command(["dump", "state", "--experiment", "eraser", "--out", &out_arg(d.path())]), 0);
    let state: Value = serde_json::from_str(&fs::read_to_string(d.path().join("state.json")).unwrap()).unwrap();
    assert_eq!(state.as_array().unwrap().len(), 4 * 32);
    let d = tempfile::tempdir().unwrap();
    let code = run_command(["dump", "branches", "--experiment", "epr", "--semantics", "convivial", "--out", &out_arg(d.path())]);
    assert_eq!(code, 0);
    let b: Value = serde_json::from_str(&fs::read_to_string(d.path().join("branches.json")).unwrap()).unwrap();
    assert!(b["nodes"].as_array().unwrap().len() >= 3);
}

#[test]
fn config_file_with_flag_override() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("eraser.toml");
    fs::write(&cfg, "shots = 300\nseed = 5\neraser-in = false\n\n[geometry]\nbins = 24\n").unwrap();
    let out = d.path().join("o");
    let code = run_command(["run", "eraser", "--config", cfg.to_str().unwrap(), "--seed", "9", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let m = manifest(&out);
    assert_eq!(m["seed"], 9);
    assert_eq!(m["config"]["shots"], 300);
    assert_eq!(m["config"]["setup"]["eraser_in"], false);
    assert_eq!(m["config"]["geometry"]["bins"], 24);
}

#[test]
fn env_var_sets_default_output_dir() {
    let d = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "epr", "--shots", "100"])
        .env(dcsim::cli::OUT_ENV, d.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(d.path().join("manifest.json").exists());
    assert!(d.path().join("joint_exact.json").exists());
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let o = out_arg(d.path());
    let run = |args: &[&str]| bin().args(args).args(["--out", &o]).output().unwrap();

    let bad = run(&["run", "mzi", "--open", "--insert-at", "4"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(!bad.stderr.is_empty());
    assert_eq!(run(&["run", "epr", "--eraser-in"]).status.code(), Some(2));
    assert_eq!(run(&["run", "mzi", "--insert-at", "1"]).status.code(), Some(2));
    assert_eq!(run(&["check", "no-signaling", "--experiment", "epr"]).status.code(), Some(2));
    assert_eq!(run(&["check", "order-independence", "--experiment", "mzi"]).status.code(), Some(2));
    assert_eq!(run(&["run", "double-slit", "--pairs", "2"]).status.code(), Some(2));
    assert_eq!(bin().args(["run"]).output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["--help"]).output().unwrap().status.code(), Some(0));
    assert_eq!(run(&["run", "mzi", "--open", "--shots", "100"]).status.code(), Some(0));
}

#[test]
fn failed_check_exits_1() {
    // One shot lands in a D0 bin of probability 1/32: a √31σ excursion.
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_command(["run", "eraser", "--shots", "1", "--out", &out_arg(d.path())]), 1);
    let m = manifest(d.path());
    assert!(m["checks"].as_array().unwrap().iter().any(|c| c["pass"] == false));
}

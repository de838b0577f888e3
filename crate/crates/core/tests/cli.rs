//! End-to-end runs of the `tmotif` binary.

use std::path::Path;
use std::process::{Command, Output};

fn tmotif(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmotif")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}\t")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .to_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = "# src dst time\na b 1\nb c 2\nc a 3\na b 5\n";

#[test]
fn count_and_local_counts() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "s.txt", SMALL);
    let o = tmotif(&["count", "--input", &input, "--motif", "cyclic-triangle", "--delta", "3"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(field(&out, "count"), "1");
    assert_eq!(field(&out, "edges"), "4");

    let o = tmotif(&["local-counts", "--input", &input, "--motif", "triangle", "--delta", "3"]);
    assert!(o.status.success());
    let eta: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().to_owned())
        .collect();
    assert_eq!(eta, ["1", "1", "1", "0"]);
}

#[test]
fn motif_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "s.txt", "a b 1\na b 1.5\n");
    let motif = write(dir.path(), "m.json", r#"{"k": 2, "edges": [[0, 1], [0, 1]]}"#);
    let o = tmotif(&["count", "--input", &input, "--motif", &motif, "--delta", "1"]);
    assert_eq!(field(&stdout(&o), "count"), "1");
}

#[test]
fn generate_round_trips_through_count() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    let path = path.to_str().unwrap();
    let args = ["--seed", "4", "generate", "--lambda", "250", "--nodes", "100", "--m-target", "3000"];
    let o = tmotif(&[&args[..], &["--output", path]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let again = tmotif(&args);
    assert_eq!(std::fs::read_to_string(path).unwrap(), stdout(&again));
    let o = tmotif(&["count", "--input", path, "--motif", "single-edge", "--delta", "1"]);
    assert_eq!(field(&stdout(&o), "count"), "3000");
}

#[test]
fn estimate_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "s.txt", SMALL);
    let o = tmotif(&["--seed", "1", "estimate", "--input", &input, "--motif", "triangle", "--delta", "3", "--p", "1"]);
    let out = stdout(&o);
    assert_eq!(field(&out, "c_hat"), "1");
    assert_eq!(field(&out, "true_count"), "1");

    let o = tmotif(&["diagnostics", "--input", &input, "--motif", "single-edge", "--delta", "1"]);
    let out = stdout(&o);
    assert_eq!(field(&out, "r_consistency"), "0.25");
    assert_eq!(field(&out, "r_clt"), "0.5");
}

#[test]
fn replicate_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "s.txt", SMALL);
    let args = ["--seed", "9", "replicate", "--input", &input, "--motif", "triangle", "--delta", "3", "--p", "0.5", "--reps", "50"];
    let a = tmotif(&args);
    let b = tmotif(&[&args[..], &["--threads", "1"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 51);
}

#[test]
fn experiment_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"mode": "coverage",
            "model": {"model": "uniform", "lambda": 250, "tau": 1, "n_nodes": 100},
            "m_target": 3000, "motif": "cyclic-triangle", "delta": 2,
            "reps": 50, "sweep": {"parameter": "p", "values": [0.1, 1]}}"#,
    );
    let o = tmotif(&["coverage", "--spec", &spec]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3);
    assert!(out.lines().next().unwrap().starts_with("p,reps,covered"));
}

#[test]
fn theory_table() {
    let o = tmotif(&["theory", "--delta", "2", "--tau", "100", "--l", "2", "--k", "2", "--nodes", "100", "--lambda", "30"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("quantity,parameters,value,std_error"));
    let expected = out.lines().find(|l| l.starts_with("expected_count")).unwrap();
    let value: f64 = expected.split(',').nth(2).unwrap().parse().unwrap();
    assert!((value - 18.0).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "s.txt", SMALL);
    let bad = write(dir.path(), "bad.txt", "a b 1\na b\n");
    let loopy_motif = write(dir.path(), "m.json", r#"{"k": 2, "edges": [[0, 0]]}"#);

    let code = |args: &[&str]| tmotif(args).status.code().unwrap();
    assert_eq!(code(&["count", "--input", &good, "--motif", "triangle", "--delta", "0"]), 2);
    assert_eq!(code(&["count", "--input", &good, "--motif", &loopy_motif, "--delta", "1"]), 2);
    assert_eq!(code(&["count", "--input", &good]), 2);
    assert_eq!(code(&["count", "--input", &bad, "--motif", "triangle", "--delta", "1"]), 3);
    let missing = dir.path().join("missing.txt");
    assert_eq!(code(&["count", "--input", missing.to_str().unwrap(), "--motif", "triangle", "--delta", "1"]), 3);
    assert_eq!(code(&["estimate", "--input", &good, "--motif", "triangle", "--delta", "1", "--p", "1.5"]), 2);
    let stderr = String::from_utf8(tmotif(&["count", "--input", &bad, "--motif", "triangle", "--delta", "1"]).stderr).unwrap();
    assert!(stderr.contains('2'), "line number missing: {stderr}");
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twisted-riesz")).args(args).env("TWISTED_RIESZ_THREADS", "1").output().unwrap()
}

fn json_at(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn cheap_subcommands_pass() {
    for args in [&["det-check", "--samples", "50"][..], &["verify-cutoffs"], &["projection", "--mu", "3", "--grid-n", "8"]] {
        let out = bin(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["reports"][0]["verdict"], "pass", "{args:?}");
        // One status line per report on stderr.
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("[PASS]"));
    }
}

#[test]
fn envelope_records_version_normalisation_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = bin(&["det-check", "--samples", "20", "--seed", "9", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v = json_at(&path);
    assert_eq!(v["version"], twisted_riesz::VERSION);
    assert_eq!(v["normalization"], twisted_riesz::NORMALIZATION);
    assert_eq!(v["config"]["subcommand"], "det-check");
    assert_eq!(v["config"]["seed"], 9);
    assert_eq!(v["config"]["extra"]["samples"], "20");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    // Same path both times: the config echoes `--out`.
    let p = dir.path().join("a.json");
    let mut runs = Vec::new();
    for _ in 0..2 {
        assert_eq!(bin(&["kernel-eval", "--lambda", "32", "--out", p.to_str().unwrap()]).status.code(), Some(0));
        runs.push(std::fs::read(&p).unwrap());
    }
    let (x, y) = (&runs[0], &runs[1]);
    assert!(!x.is_empty());
    assert_eq!(x, y);
}

#[test]
fn exit_codes() {
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
    assert_eq!(bin(&["--version"]).status.code(), Some(0));
    assert_eq!(bin(&["det-check", "--bogus"]).status.code(), Some(1));
    assert_eq!(bin(&[]).status.code(), Some(1));
    // δ at the critical index is refused.
    let out = bin(&["convergence", "--delta", "0", "--p", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
    assert_eq!(bin(&["projection", "--mu", "4"]).status.code(), Some(1));
    assert_eq!(bin(&["kernel-eval", "--lambda", "-1"]).status.code(), Some(1));
    // Too short a λ range to see the λ^{−1/2} decay through the O(λ^{−3/2}) tail.
    assert_eq!(bin(&["stationary-compare", "--lambda", "1024"]).status.code(), Some(2));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# comment\nseed = 5\nsamples = 30\nformat = json\n").unwrap();
    let path = dir.path().join("o.json");
    let c = cfg.to_str().unwrap();
    let o = path.to_str().unwrap();
    assert_eq!(bin(&["det-check", "--config", c, "--out", o]).status.code(), Some(0));
    let v = json_at(&path);
    assert_eq!((v["config"]["seed"].clone(), v["config"]["extra"]["samples"].clone()), (5.into(), "30".into()));
    assert_eq!(bin(&["det-check", "--config", c, "--seed", "6", "--out", o]).status.code(), Some(0));
    assert_eq!(json_at(&path)["config"]["seed"], 6);

    std::fs::write(&cfg, "nonsense = 1\n").unwrap();
    assert_eq!(bin(&["det-check", "--config", c]).status.code(), Some(1));
    assert_eq!(bin(&["det-check", "--config", dir.path().join("missing").to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn csv_output() {
    let out = bin(&["det-check", "--samples", "10", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    assert!(!rdr.headers().unwrap().is_empty());
    let rows: Vec<_> = rdr.records().collect::<Result<_, _>>().unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.len() == rows[0].len()));
}

#[test]
fn in_process_entry_point() {
    assert_eq!(twisted_riesz::cli::run(["twisted-riesz", "det-check", "--samples", "5", "--out", "/dev/null"]), 0);
    assert_eq!(twisted_riesz::cli::run(["twisted-riesz", "nope"]), 1);
}

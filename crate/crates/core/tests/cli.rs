use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn ged(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ged"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn design(name: &str) -> String {
    format!("{}/designs/{name}.ged", env!("CARGO_MANIFEST_DIR"))
}

fn broken_files() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/broken");
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "ged"))
        .collect();
    files.sort();
    files
}

/// `FILE:LINE:COL: message` with positive line and column.
fn has_position(stderr: &str, file: &str) -> bool {
    stderr.lines().any(|l| {
        let Some(rest) = l.strip_prefix(file).and_then(|r| r.strip_prefix(':')) else {
            return false;
        };
        let mut parts = rest.splitn(3, ':');
        let line = parts.next().and_then(|s| s.parse::<usize>().ok());
        let col = parts.next().and_then(|s| s.parse::<usize>().ok());
        matches!((line, col), (Some(l), Some(c)) if l > 0 && c > 0) && parts.next().is_some()
    })
}

#[test]
fn serve_is_deterministic() {
    let a = ged(&["serve", &design("fisher"), "--seed", "1"]);
    let b = ged(&["serve", &design("fisher"), "--seed", "1"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().count(), 109);
}

#[test]
fn seed_flag_equals_editing_the_file() {
    let dir = TempDir::new().unwrap();
    let src = fs::read_to_string(design("fisher")).unwrap();
    let edited = dir.path().join("fisher42.ged");
    fs::write(&edited, src.replace("seed 1", "seed 42")).unwrap();
    let flag = ged(&["serve", &design("fisher"), "--seed", "42"]);
    let file = ged(&["serve", edited.to_str().unwrap()]);
    assert_eq!(flag.stdout, file.stdout);
    let default = ged(&["serve", &design("fisher")]);
    assert_ne!(default.stdout, flag.stdout);
}

#[test]
fn missing_seed_defaults_to_zero() {
    let dir = TempDir::new().unwrap();
    let src = fs::read_to_string(design("fisher")).unwrap();
    let unseeded = dir.path().join("unseeded.ged");
    fs::write(&unseeded, src.replace(" seed 1", "")).unwrap();
    let implicit = ged(&["serve", unseeded.to_str().unwrap()]);
    let zero = ged(&["serve", &design("fisher"), "--seed", "0"]);
    assert!(implicit.status.success());
    assert_eq!(implicit.stdout, zero.stdout);
}

#[test]
fn output_file() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("table.csv");
    let run = ged(&["serve", &design("motion"), "-o", out.to_str().unwrap()]);
    assert!(run.status.success());
    assert!(run.stdout.is_empty());
    let csv = fs::read_to_string(out).unwrap();
    assert!(csv.starts_with("experiment,subject,frequency,acceleration\n"));
    assert!(csv.contains("experiment4,subject129,0.250,0.222\n"));
}

#[test]
fn check_reports_success_and_failure() {
    let ok = ged(&["check", &design("nested")]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("216 rows"));

    let bad = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/broken/undeclared_factor.ged");
    let bad = bad.to_str().unwrap();
    let run = ged(&["check", bad]);
    assert_eq!(run.status.code(), Some(1));
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(
        err.starts_with(&format!("{bad}:4:15: undeclared factor `ghost`")),
        "{err}"
    );
}

#[test]
fn check_reports_unservable_designs() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("two.ged");
    fs::write(&path, "design { units { patch = 2 bench = 2 } }").unwrap();
    let run = ged(&["check", path.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("bench:bench1"));
}

#[test]
fn graph_kinds() {
    let factor = ged(&["graph", &design("fisher")]);
    assert!(factor.status.success());
    assert!(String::from_utf8_lossy(&factor.stdout).contains(r#""variety" -> "patch""#));
    let level = ged(&["graph", &design("motion"), "--kind", "level"]);
    assert!(String::from_utf8_lossy(&level.stdout).contains(r#""subject:1" -> "experiment:1""#));
    let bad = ged(&["graph", &design("motion"), "--kind", "nope"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn io_failures_exit_two() {
    assert_eq!(ged(&["serve", "/no/such/file.ged"]).status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("missing-dir/out.csv");
    let run = ged(&["serve", &design("fisher"), "-o", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn usage_errors() {
    assert_eq!(ged(&[]).status.code(), Some(2));
    assert_eq!(ged(&["serve"]).status.code(), Some(2));
    assert_eq!(ged(&["--help"]).status.code(), Some(0));
}

#[test]
fn broken_corpus_exits_one_with_position() {
    let files = broken_files();
    assert!(files.len() >= 15);
    for f in files {
        let f = f.to_str().unwrap();
        let run = ged(&["serve", f]);
        let err = String::from_utf8_lossy(&run.stderr);
        assert_eq!(run.status.code(), Some(1), "{f}: {err}");
        assert!(has_position(&err, f), "{f}: {err}");
    }
}

#[test]
fn random_bytes_through_the_binary() {
    // a small sample through the real process; the full corpus runs in-process
    let dir = TempDir::new().unwrap();
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    for i in 0..100 {
        let mut bytes = Vec::new();
        for _ in 0..(i * 7 % 200) {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            bytes.push((state >> 56) as u8);
        }
        let path = dir.path().join(format!("fuzz{i}.ged"));
        fs::write(&path, &bytes).unwrap();
        let run = ged(&["serve", path.to_str().unwrap()]);
        assert_eq!(run.status.code(), Some(1), "case {i}");
    }
}

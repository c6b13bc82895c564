use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mfdstag"));
    c.env_remove("MFDSTAG_THREADS");
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Parses the single diagnostic line into (code, exit).
fn diagnostic(o: &Output) -> (String, i32) {
    let text = stderr(o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "{text}");
    let mut code = None;
    let mut exit = None;
    for word in lines[0].split(' ') {
        if let Some(c) = word.strip_prefix("code=") {
            code = Some(c.to_string());
        }
        if let Some(e) = word.strip_prefix("exit=") {
            exit = Some(e.parse().unwrap());
        }
    }
    assert!(lines[0].starts_with("error code="));
    (code.unwrap(), exit.unwrap())
}

fn field(text: &str, key: &str) -> f64 {
    let words: Vec<&str> = text.split_whitespace().collect();
    words
        .windows(2)
        .find_map(|w| if w[0] == key { w[1].parse().ok() } else { None })
        .unwrap_or_else(|| panic!("no `{key}` in {text}"))
}

#[test]
fn mesh_info_on_the_two_by_two_square() {
    let o = run(&["mesh-info", "--set", "mesh.family=quad", "--set", "mesh.n=2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert_eq!(field(&s, "cells"), 4.0);
    assert_eq!(field(&s, "faces"), 12.0);
    assert_eq!(field(&s, "vertices"), 9.0);
    assert!((field(&s, "h") - 2f64.sqrt() / 2.0).abs() <= 1e-15);
}

#[test]
fn default_convergence_study_meets_the_rate_floor() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["converge", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(field(&stdout(&o), "rate_p") >= 1.8);
    let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert!(csv.starts_with("level,h,n_cells,n_faces,e_p,e_v"));
    assert_eq!(csv.lines().count(), 5);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("convergence.json")).unwrap()).unwrap();
    assert!(json.is_object());
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("smooth.toml");
    for d in [&a, &b] {
        let o = run(&[
            "converge",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "mesh.levels=[4, 8, 16]",
            "--set",
            "converge.rate_v_floor=0",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in ["convergence.csv", "convergence.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn patch_test_config_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("patch_test.toml");
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(field(&s, "max_p").abs() <= 1e-11, "{s}");
    assert!(dir.path().join("solution.csv").exists());
}

#[test]
fn print_config_round_trips_overrides() {
    let o = run(&["solve", "--set", "mesh.n=7", "--print-config"]);
    assert!(o.status.success());
    let cfg: toml::Value = toml::from_str(&stdout(&o)).unwrap();
    assert_eq!(cfg["mesh"]["n"].as_integer(), Some(7));
}

#[test]
fn failures_are_single_line_with_stable_codes() {
    let missing = run(&["solve", "--config", "/nonexistent/run.toml"]);
    assert_eq!(diagnostic(&missing), ("IO".into(), 3));
    assert_eq!(missing.status.code(), Some(3));

    let usage = run(&["frobnicate"]);
    assert_eq!(diagnostic(&usage), ("USAGE".into(), 2));
    assert_eq!(usage.status.code(), Some(2));

    let key = run(&["solve", "--set", "mesh.n=-1"]);
    assert_eq!(diagnostic(&key), ("CONFIG".into(), 2));

    let expr = run(&["solve", "--set", "problem.pressure=sin(x"]);
    assert_eq!(diagnostic(&expr), ("EXPRESSION".into(), 5));
    assert_eq!(expr.status.code(), Some(5));

    let mesh = run(&["mesh-info", "--set", "mesh.n=0"]);
    assert_eq!(diagnostic(&mesh), ("MESH".into(), 4));

    let threads = bin().args(["mesh-info"]).env("MFDSTAG_THREADS", "zero").output().unwrap();
    assert_eq!(diagnostic(&threads), ("CONFIG".into(), 2));
    let ok = bin().args(["mesh-info"]).env("MFDSTAG_THREADS", "4").output().unwrap();
    assert!(ok.status.success());
}

#[test]
fn help_goes_to_stdout() {
    let o = run(&["--help"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("mesh-info"));
}

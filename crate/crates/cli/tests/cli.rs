use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kelo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kelo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_r1(out: &Path) -> Output {
    kelo(&[
        "run",
        "--preset",
        "r1",
        "--steps",
        "2e3",
        "--realizations",
        "4",
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn check_reports_monotone_response() {
    let o = kelo(&["check", "--nu", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("(B′) holds"));
}

#[test]
fn check_flags_large_sigma() {
    let o = kelo(&["check", "--nu", "1", "--sigma", "2"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("(B′) fails"));
}

#[test]
fn r1_run_compresses_ratings() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_r1(dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS compression"));
    for f in [
        "trajectory.csv",
        "scatter.csv",
        "report.csv",
        "verdict.txt",
        "manifest.toml",
    ] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    small_r1(a.path());
    let o = kelo(&[
        "--threads",
        "1",
        "run",
        "--preset",
        "r1",
        "--steps",
        "2e3",
        "--realizations",
        "4",
        "--out",
        b.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    for f in ["trajectory.csv", "scatter.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn manifest_reproduces_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    small_r1(a.path());
    let manifest = a.path().join("manifest.toml");
    let o = kelo(&[
        "run",
        "--config",
        manifest.to_str().unwrap(),
        "--out",
        b.path().to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(
        fs::read(a.path().join("scatter.csv")).unwrap(),
        fs::read(b.path().join("scatter.csv")).unwrap()
    );
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "mode = \"micro\"\nbogus = 1\n").unwrap();
    let o = kelo(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn invalid_parameter_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = kelo(&[
        "run",
        "--mode",
        "micro",
        "--nu",
        "-1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn macro2d_run_then_analyze_moments() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = kelo(&[
        "run",
        "--mode",
        "macro2d",
        "--t-end",
        "0.2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS energy_decay"));
    let an = dir.path().join("an");
    let o = kelo(&[
        "analyze",
        "--moments",
        out.join("moments.csv").to_str().unwrap(),
        "--nu",
        "1",
        "--gap",
        "10",
        "--out",
        an.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(an.join("report.csv").exists());
    assert!(stdout(&o).contains("PASS second_moment_nonincreasing"));
}

#[test]
fn fig7_orders_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let o = kelo(&[
        "run",
        "--preset",
        "fig7-nu-sweep",
        "--realizations",
        "4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS slope_ordering"));
}

#[test]
fn analyze_without_inputs_is_usage_error() {
    let o = kelo(&["analyze"]);
    assert_eq!(o.status.code(), Some(2));
}

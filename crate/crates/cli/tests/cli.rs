use std::fs;
use std::process::{Command, Output};

fn regmcts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regmcts")).args(args).output().unwrap()
}

#[test]
fn solve_prints_the_two_action_solution() {
    let out = regmcts(&["solve", "--q", "1,0", "--lambda", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let policy: Vec<f64> = text
        .lines()
        .find_map(|l| l.strip_prefix("policy: "))
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((policy[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    assert!(text.contains("kkt_residual: "));
}

#[test]
fn solve_accepts_counts_and_negative_q() {
    let out = regmcts(&["solve", "--q", "-0.5,0.25,0", "--counts", "2,3,0", "--kind", "hellinger"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn errors_exit_with_two() {
    assert_eq!(regmcts(&["solve", "--q", "1,0", "--lambda", "-1"]).status.code(), Some(2));
    assert_eq!(regmcts(&["--config", "/nonexistent.toml", "track"]).status.code(), Some(2));
    assert_eq!(regmcts(&["--workers", "0", "track"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    fs::write(&config, "experiment = \"sweep\"\n").unwrap();
    let out = regmcts(&["--config", config.to_str().unwrap(), "track"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep"));
}

#[test]
fn track_writes_csv_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("track.toml");
    fs::write(&config, "n_sim = 3\n").unwrap();
    let out = regmcts(&["--config", config.to_str().unwrap(), "--seed", "2", "track"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("seed,step,"));
}

#[test]
fn bound_and_props_pass_on_small_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    fs::write(&config, "seeds = [0]\nhorizon = 500\ninstances = 300\n").unwrap();
    for command in ["bound", "props"] {
        let out = regmcts(&["--config", config.to_str().unwrap(), command]);
        assert_eq!(out.status.code(), Some(0), "{command}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

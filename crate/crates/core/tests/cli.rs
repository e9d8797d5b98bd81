//! Command-line behaviour, run against the built binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn symga(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symga"))
        .args(args)
        .current_dir(dir)
        .env("SYMGA_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("examples/data")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn rps_is_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let o = symga(&["check-symmetry", "--game", &data("rps.json")], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "symmetric: true");
}

#[test]
fn asymmetric_game_reports_witness() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(data("rps.json")).unwrap()).unwrap();
    spec["cost"][1][0][0] = serde_json::json!(0.5);
    let path = dir.path().join("skew.json");
    std::fs::write(&path, spec.to_string()).unwrap();
    let o = symga(&["check-symmetry", "--game", "skew.json"], dir.path());
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("symmetric: false"), "{out}");
    assert!(out.contains("witness"));
}

#[test]
fn recursion_check_prints_the_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = symga(&["recursion-check", "--u", "0.9", "--p", "0.1", "--k", "500"], dir.path());
    assert!(o.status.success());
    let first: f64 = stdout(&o).lines().next().unwrap().parse().unwrap();
    assert!((first - 0.5).abs() < 1e-10);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // usage errors
    assert_eq!(symga(&[], dir.path()).status.code(), Some(2));
    assert_eq!(symga(&["validate"], dir.path()).status.code(), Some(2));
    assert_eq!(symga(&["frobnicate"], dir.path()).status.code(), Some(2));
    // randomized commands need a seed
    let o = symga(&["oracle-sim", "--game", &data("rps.json"), "--grid", "4", "--eps", "0.3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    // domain errors
    assert_eq!(symga(&["validate", "--game", "missing.json"], dir.path()).status.code(), Some(1));
    std::fs::write(dir.path().join("bad.json"), "{\"num_players\": 2}").unwrap();
    assert_eq!(symga(&["validate", "--game", "bad.json"], dir.path()).status.code(), Some(1));
    let o = symga(&["recursion-check", "--u", "0.1", "--p", "0.9", "--k", "5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_prints_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let o = symga(&["validate", "--game", &data("two_state.json")], dir.path());
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("players: 2"));
    assert!(out.contains("states: 2"));
    assert!(out.contains("actions: 2,2"));
}

#[test]
fn check_eq_on_a_policy_and_on_a_grid() {
    let dir = tempfile::tempdir().unwrap();
    let rock = "[[[1,0,0]],[[1,0,0]]]";
    let o = symga(&["check-eq", "--game", &data("rps.json"), "--eps", "0.2", "--policy", rock], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("equilibrium: false"));

    let o = symga(&["check-eq", "--game", &data("matching3.json"), "--eps", "0.1", "--grid", "1"], dir.path());
    assert!(o.status.success());
    // all-first and all-second action
    assert!(stdout(&o).starts_with("equilibria: 2"));
}

#[test]
fn revision_path_and_verify_paths() {
    let dir = tempfile::tempdir().unwrap();
    let o = symga(
        &[
            "revision-path", "--game", &data("rps.json"), "--grid", "10", "--eps", "0.2", "--boundary", "satisfied",
            "--start", "[[[1,0,0]],[[0,1,0]]]", "--out", "path.json",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("valid: true"));
    let path: symga::revision::RevisionPath =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("path.json")).unwrap()).unwrap();
    assert!(path.len() <= 3);

    let o = symga(&["verify-paths", "--game", &data("matching3.json"), "--grid", "1", "--eps", "0.1"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("holds: true"));
}

#[test]
fn simulate_writes_run_frequency_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let game = data("rps.json");
    let args = [
        "simulate", "--game", game.as_str(), "--grid", "10", "--eps", "0.2", "--phases", "12", "--phase-len", "300",
        "--trials", "3", "--seed", "7", "--out", "run.csv",
    ];
    let o = symga(&args, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = std::fs::read(dir.path().join("run.csv")).unwrap();
    let freq = std::fs::read_to_string(dir.path().join("freq.csv")).unwrap();
    let sidecar = std::fs::read_to_string(dir.path().join("run.config.json")).unwrap();
    assert_eq!(freq.lines().count(), 13);
    assert!(sidecar.contains("\"delta\""));

    // aggregate reproduces the frequency file
    let o = symga(&["aggregate", "--input", "run.csv"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o), freq);

    // a second run with the same seed is byte-identical
    let o = symga(&[&args[..args.len() - 1], &["again.csv", "--freq", "again_freq.csv"]].concat(), dir.path());
    assert!(o.status.success());
    assert_eq!(std::fs::read(dir.path().join("again.csv")).unwrap(), run);
    assert_eq!(std::fs::read_to_string(dir.path().join("again_freq.csv")).unwrap(), freq);
}

#[test]
fn simulate_flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = serde_json::json!({
        "game": data("rps.json"),
        "resolution": 4,
        "eps": 0.3,
        "phases": 3,
        "phase_length": 100,
        "trials": 2,
        "seed": 1,
        "learner": { "delta": 0.01, "rho": 0.1 }
    });
    std::fs::write(dir.path().join("cfg.json"), config.to_string()).unwrap();
    let o = symga(&["simulate", "--config", "cfg.json", "--phases", "5", "--rho", "0.2", "--out", "r.csv"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.config.json")).unwrap()).unwrap();
    assert_eq!(sidecar["phases"], 5);
    assert_eq!(sidecar["learner"]["rho"], 0.2);
    assert_eq!(sidecar["learner"]["delta"], 0.01);

    std::fs::write(dir.path().join("bad.json"), "{\"resolution\": 4, \"learner\": {\"rho\": 1.5}}").unwrap();
    let o = symga(
        &["simulate", "--config", "bad.json", "--game", &data("rps.json"), "--eps", "0.3", "--phases", "1",
          "--phase-len", "1", "--seed", "1", "--delta", "0.01", "--out", "x.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho"));
}

#[test]
fn bar_delta_with_rho_search() {
    let dir = tempfile::tempdir().unwrap();
    let o = symga(&["bar-delta", "--game", &data("rps.json"), "--grid", "10", "--eps", "0.2", "--rho0", "0.5"], dir.path());
    assert!(o.status.success());
    let out = stdout(&o);
    let bd: f64 = out.lines().next().unwrap().strip_prefix("bar_delta: ").unwrap().parse().unwrap();
    assert!((bd - 0.01).abs() < 1e-9);
    assert!(out.contains("halvings:"));
}

#[test]
fn oracle_sim_reports_absorption() {
    let dir = tempfile::tempdir().unwrap();
    let o = symga(
        &["oracle-sim", "--game", &data("matching3.json"), "--grid", "1", "--eps", "0.1", "--e", "0.5",
          "--trajectories", "40", "--steps", "60", "--seed", "4"],
        dir.path(),
    );
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["departures"], 0);
    assert_eq!(r["absorbed"], 40);
}

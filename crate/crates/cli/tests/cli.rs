//! End-to-end checks of the command-line binary: exit codes, emitted files,
//! and determinism, all on coarse grids so each subprocess finishes fast.

use std::path::Path;
use std::process::{Command, Output};

use oirl_cli::config::parse_config;

fn oirl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oirl"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.cfg");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn dump_config_round_trips_through_the_parser() {
    let out = oirl(&["dump-config"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = parse_config(&text).expect("dumped configuration parses");
    assert_eq!(cfg.dump(), text);
}

#[test]
fn run_writes_all_outputs_and_reruns_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    // Unset keys fall back to defaults, so the file carries only overrides.
    let cfg = write_config(dir.path(), "dt = 0.01\nt_final = 6\n");
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = oirl(&["run", &cfg, "--out", out_dir.to_str().unwrap()]);
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for name in ["run.csv", "events.csv", "summary.txt", "pe_stack.csv", "irl_stack.csv"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert!(!a.is_empty(), "{name} is empty");
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn check_rejects_a_non_hurwitz_observer_gain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "observer_k = 0, 0, 0, 0\n");
    let out = oirl(&["check", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("Hurwitz"), "stderr: {stderr}");
}

#[test]
fn run_exits_with_two_when_the_state_diverges() {
    let dir = tempfile::tempdir().unwrap();
    // The initial state already exceeds this bound, so the first step trips.
    let cfg = write_config(dir.path(), "blowup_bound = 0.5\n");
    let out = oirl(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("diverged"), "stderr: {stderr}");
}

#[test]
fn short_horizon_run_warns_that_estimators_never_started() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dt = 0.01\nt_final = 2\n");
    let out_dir = dir.path().join("out");
    let out = oirl(&["run", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("never ungated"), "stderr: {stderr}");
    let summary = std::fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(summary.contains("never"), "summary: {summary}");
}

#[test]
fn unknown_configuration_keys_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "not_a_key = 3\n");
    let out = oirl(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(1));
}

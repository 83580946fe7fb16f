//! Exit codes and files of the command-line tool.

use std::path::PathBuf;
use std::process::Command;

fn mcfl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mcfl"))
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(mcfl().arg("frobnicate").status().unwrap().code(), Some(1));
    assert_eq!(mcfl().arg("run").status().unwrap().code(), Some(1));
}

#[test]
fn invalid_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "profile.kappa = [0.6, 0.5]\n").unwrap();
    let out = mcfl().args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("profile.kappa"));
}

#[test]
fn run_then_emit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(
        &cfg,
        "rounds = 2\nrepetitions = 1\nschemes = [\"Benchmark\"]\ntopology.devices_per_cell = 3\ndata.train_per_label = 6\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = mcfl().args(["run", "--seed", "7", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    for f in ["metrics.csv", "metrics_avg.csv", "digests.csv", "bounds.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let avg: PathBuf = out.join("metrics_avg.csv");
    let emitted = mcfl().args(["emit", "--kind", "loss_vs_round", "--in"]).arg(&avg).output().unwrap();
    assert!(emitted.status.success());
    assert!(String::from_utf8_lossy(&emitted.stdout).starts_with("round\tBenchmark / cell 1"));
    let unknown = mcfl().args(["emit", "--kind", "bogus", "--in"]).arg(&avg).status().unwrap();
    assert_eq!(unknown.code(), Some(1));
}

//! End-to-end runs of small experiments.

use mcfl_harness::config::{load_config, parse_config, ExperimentConfig};
use mcfl_harness::experiment::{run_all, run_experiment, AVERAGE_FILE, METRICS_FILE};
use mcfl_harness::metrics::average;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

fn preset(name: &str) -> ExperimentConfig {
    load_config(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)).unwrap()
}

fn small(schemes: &str, rounds: usize, reps: usize) -> ExperimentConfig {
    parse_config(
        &format!(
            "rounds = {rounds}\nrepetitions = {reps}\nschemes = [{schemes}]\n\
             topology.devices_per_cell = 4\ndata.train_per_label = 12\ndata.test_per_label = 6\ndata.features = 8\n"
        ),
        Path::new("."),
    )
    .unwrap()
}

#[test]
fn identical_seeds_give_identical_averages() {
    let cfg = small("\"Benchmark\", \"DL-Opt & UL-Opt\"", 5, 2);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg, a.path()).unwrap();
    run_experiment(&cfg, b.path()).unwrap();
    for f in [METRICS_FILE, AVERAGE_FILE] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let mut other = cfg.clone();
    other.seed += 1;
    let c = tempfile::tempdir().unwrap();
    run_experiment(&other, c.path()).unwrap();
    assert_ne!(std::fs::read(a.path().join(METRICS_FILE)).unwrap(), std::fs::read(c.path().join(METRICS_FILE)).unwrap());
}

#[test]
fn schemes_share_channel_draws() {
    let cfg = small("\"Benchmark\", \"UL-Full\", \"DL-Opt & UL-Opt\"", 6, 2);
    let out = run_all(&cfg).unwrap();
    let mut by_round: BTreeMap<(usize, usize), Vec<&str>> = BTreeMap::new();
    for d in &out.digests {
        by_round.entry((d.repetition, d.round)).or_default().push(&d.digest);
    }
    assert_eq!(by_round.len(), 12);
    for (key, digests) in &by_round {
        assert_eq!(digests.len(), 3, "{key:?}");
        assert!(digests.iter().all(|d| *d == digests[0]), "{key:?}");
    }
    let distinct: std::collections::BTreeSet<&str> = by_round.values().map(|d| d[0]).collect();
    assert_eq!(distinct.len(), 12, "every round and repetition draws a new channel");
}

#[test]
fn averaged_benchmark_loss_never_increases() {
    let mut cfg = preset("two_cell.toml");
    cfg.rounds = 50;
    cfg.repetitions = 5;
    cfg.schemes = vec![mcfl_core::fedlearn::Scheme::BENCHMARK];
    let out = run_all(&cfg).unwrap();
    let avg = average(&out.rows, &["Benchmark".to_string()]);
    for cell in 1..=2 {
        let curve: Vec<f64> = avg.iter().filter(|r| r.cell == cell).map(|r| r.train_loss).collect();
        assert_eq!(curve.len(), 51);
        for w in curve.windows(2) {
            assert!(w[1] <= w[0], "cell {cell}: {} after {}", w[1], w[0]);
        }
    }
}

#[test]
fn rows_cover_every_round_cell_and_scheme() {
    let cfg = small("\"Benchmark\", \"UL-IgnInter\"", 3, 2);
    let out = run_all(&cfg).unwrap();
    assert_eq!(out.rows.len(), 2 * 2 * 4 * 2);
    assert!(out.rows.iter().all(|r| r.train_loss.is_finite() && (1..=2).contains(&r.cell)));
    assert!(out.rows.iter().filter(|r| r.round == 0).all(|r| r.e_ul == 0.0 && r.gap == 0.0));
    assert!(out.rows.iter().filter(|r| r.scheme == "Benchmark").all(|r| r.e_dl == 0.0 && r.e_ul == 0.0));
    assert!(out.rows.iter().filter(|r| r.scheme == "UL-IgnInter" && r.round > 0).all(|r| r.e_ul > 0.0));
    assert_eq!(out.bounds.len(), 2 * 2 * 2);
    assert!(out.bounds.iter().all(|b| b.holds()));
}

#[test]
fn failed_runs_leave_no_output() {
    let cfg = parse_config("rounds = 2\nrepetitions = 1\nlearner.eta = [5.0, 5.0]\n", Path::new(".")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    assert!(run_experiment(&cfg, dir.path()).is_err());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn presets_convert_units() {
    let four = preset("four_cell.toml");
    assert_eq!(four.power.dl.len(), 4);
    for (got, want) in four.power.dl.iter().zip([10.0, 1.0, 1.0, 10.0]) {
        assert!((got - want).abs() < 1e-12 * want);
    }
    assert!((four.noise_dl - 1e-14).abs() < 1e-26);
    let two = preset("two_cell.toml");
    let ul = two.budget_ul();
    assert_eq!(ul.len(), 20);
    assert!((ul[0] - 10f64.powf(-1.5)).abs() < 1e-15 && (ul[9] - 1.0).abs() < 1e-15);
    assert_eq!(two.schemes.len(), 7);
}

//! Plot data produced from real runs and sweeps.

use mcfl_harness::config::{load_config, parse_config};
use mcfl_harness::experiment::{run_experiment, AVERAGE_FILE};
use mcfl_harness::pareto::{pareto_sweep, write_pareto};
use mcfl_harness::plot::{emit_plot_data, PlotError, PlotKind};
use std::path::{Path, PathBuf};

fn parse_tsv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split('\t').map(String::from).collect();
    let rows = lines.map(|l| l.split('\t').map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn averaged_metrics() -> String {
    let cfg = parse_config(
        "rounds = 4\nrepetitions = 2\nschemes = [\"Benchmark\", \"DL-Full & UL-Full\"]\n\
         topology.devices_per_cell = 4\ndata.train_per_label = 12\ndata.features = 6\n",
        Path::new("."),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg, dir.path()).unwrap();
    std::fs::read_to_string(dir.path().join(AVERAGE_FILE)).unwrap()
}

#[test]
fn multicell_average_is_the_mean_of_cell_series() {
    let avg = averaged_metrics();
    let (lh, loss) = parse_tsv(&emit_plot_data(PlotKind::LossVsRound, &avg, None).unwrap());
    let (ah, acc) = parse_tsv(&emit_plot_data(PlotKind::AccVsRound, &avg, None).unwrap());
    let (mh, mean) = parse_tsv(&emit_plot_data(PlotKind::AvgMulticell, &avg, None).unwrap());
    assert_eq!(lh.len(), 5);
    assert_eq!(ah, lh);
    assert_eq!(mh[1], "Benchmark / loss");
    assert_eq!(loss.len(), 5);
    for (i, row) in mean.iter().enumerate() {
        assert_eq!(row[0], i as f64);
        for s in 0..2 {
            let want_loss = (loss[i][1 + 2 * s] + loss[i][2 + 2 * s]) / 2.0;
            let want_acc = (acc[i][1 + 2 * s] + acc[i][2 + 2 * s]) / 2.0;
            assert!((row[1 + 2 * s] - want_loss).abs() <= 1e-12 * want_loss.abs().max(1.0));
            assert!((row[2 + 2 * s] - want_acc).abs() <= 1e-12);
        }
    }
}

#[test]
fn filters_and_kinds() {
    let avg = averaged_metrics();
    let keep = vec!["DL-Full & UL-Full".to_string()];
    let (h, _) = parse_tsv(&emit_plot_data(PlotKind::LossVsRound, &avg, Some(&keep)).unwrap());
    assert_eq!(h, ["round", "DL-Full & UL-Full / cell 1", "DL-Full & UL-Full / cell 2"]);
    assert_eq!(emit_plot_data(PlotKind::LossVsRound, &avg, Some(&[])), Err(PlotError::EmptySelection));
    assert!(matches!("scatter".parse::<PlotKind>(), Err(PlotError::UnknownKind(_))));
    assert!(matches!(emit_plot_data(PlotKind::ParetoRegion, &avg, None), Err(PlotError::Input(_))));
}

#[test]
fn pareto_region_has_one_point_per_profile() {
    let cfg = load_config(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/two_cell.toml")).unwrap();
    let points = pareto_sweep(&cfg).unwrap();
    let mut buf = Vec::new();
    write_pareto(&mut buf, &points).unwrap();
    let tsv = emit_plot_data(PlotKind::ParetoRegion, std::str::from_utf8(&buf).unwrap(), None).unwrap();
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines[0], "kind\tlabel\tkappa_bar\tgap_1\tgap_2");
    let boundary: Vec<&str> = lines.iter().copied().filter(|l| l.starts_with("boundary")).collect();
    assert_eq!(boundary.len(), 7);
    let bars: Vec<f64> = boundary.iter().map(|l| l.split('\t').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(bars, [0.0001, 0.001, 0.1, 0.5, 0.9, 0.99, 0.9999]);
    assert_eq!(lines.iter().filter(|l| l.starts_with("baseline")).count(), 3);
}

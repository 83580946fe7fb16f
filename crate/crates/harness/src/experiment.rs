//! Repeated paired runs of every configured scheme.

use crate::config::{DataSource, EtaPolicy, ExperimentConfig};
use crate::metrics::{
    average, write_average, write_bounds, write_digests, write_metrics, AverageRow, BoundRow, DigestRow, MetricsRow,
};
use mcfl_core::coopt::SolverOptions;
use mcfl_core::fedlearn::{
    evaluate, gaussian_blobs, idx_dataset, read_idx_images, read_idx_labels, run_round, shard_dataset,
    smoothness_bound, softmax_loss, BlobSpec, Dataset, FlState, Scheme, World,
};
use mcfl_core::gapmodel::theorem1_bound;
use mcfl_core::netchan::{sample_topology, ChannelParams, ChannelSet, GeometryConfig, Point};
use mcfl_core::rng::{derive_seed, stream, stream_rng};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

/// Train and test pools of every cell, loaded once per experiment.
#[derive(Debug, Clone)]
pub enum PreparedData {
    Synthetic,
    Idx(Vec<(Dataset<f64>, Dataset<f64>)>),
}

pub fn prepare_data(cfg: &ExperimentConfig) -> mcfl_core::Result<PreparedData> {
    match &cfg.data {
        DataSource::Synthetic { .. } => Ok(PreparedData::Synthetic),
        DataSource::Idx { classes, cells, .. } => cells
            .iter()
            .map(|c| {
                let train = idx_dataset(
                    &read_idx_images(&c.train_images)?,
                    &read_idx_labels(&c.train_labels)?,
                    c.first_label,
                    *classes,
                )?;
                let test = idx_dataset(
                    &read_idx_images(&c.test_images)?,
                    &read_idx_labels(&c.test_labels)?,
                    c.first_label,
                    *classes,
                )?;
                Ok((train, test))
            })
            .collect::<mcfl_core::Result<Vec<_>>>()
            .map(PreparedData::Idx),
    }
}

fn random_subset(d: &Dataset<f64>, keep: Option<usize>, rng: &mut impl rand::Rng) -> Dataset<f64> {
    match keep {
        Some(n) if n < d.len() => {
            let mut idx: Vec<usize> = (0..d.len()).collect();
            idx.shuffle(rng);
            idx.truncate(n);
            idx.sort_unstable();
            d.subset(&idx)
        }
        _ => d.clone(),
    }
}

fn rep_seed(cfg: &ExperimentConfig, rep: usize, redraw: bool) -> u64 {
    if redraw {
        derive_seed(cfg.seed, &[rep as u64])
    } else {
        derive_seed(cfg.seed, &[0])
    }
}

/// The world of repetition `rep` together with its learning rates.
pub fn build_world(cfg: &ExperimentConfig, data: &PreparedData, rep: usize) -> mcfl_core::Result<(World<f64>, Vec<f64>)> {
    let t = &cfg.topology;
    let mut geometry = GeometryConfig::<f64>::hexagonal_quad(t.cells, t.devices_per_cell);
    if let Some(p) = &t.bs_positions {
        geometry.bs_positions = p.iter().map(|&(x, y)| Point::new(x, y)).collect();
        geometry.devices_per_cell = vec![t.devices_per_cell; t.cells];
    }
    geometry.radius_min = t.radius_min;
    geometry.radius_max = t.radius_max;
    let topo_seed = rep_seed(cfg, rep, cfg.redraw.topology);
    let topology = sample_topology(&geometry, &mut stream_rng(topo_seed, &[stream::TOPOLOGY]))?;

    let data_seed = rep_seed(cfg, rep, cfg.redraw.data);
    let mut shards = Vec::with_capacity(cfg.num_devices());
    let mut test = Vec::with_capacity(t.cells);
    for m in 0..t.cells {
        let mut rng = stream_rng(data_seed, &[stream::DATA, m as u64]);
        let (train, te) = match (&cfg.data, data) {
            (
                DataSource::Synthetic {
                    classes,
                    features,
                    train_per_label,
                    test_per_label,
                    spread,
                },
                _,
            ) => gaussian_blobs(
                &BlobSpec {
                    labels: (0..*classes).collect(),
                    classes: *classes,
                    features: *features,
                    train_per_label: *train_per_label,
                    test_per_label: *test_per_label,
                    spread: *spread,
                },
                &mut rng,
            )?,
            (DataSource::Idx { max_train, max_test, .. }, PreparedData::Idx(pools)) => (
                random_subset(&pools[m].0, *max_train, &mut rng),
                random_subset(&pools[m].1, *max_test, &mut rng),
            ),
            (DataSource::Idx { .. }, PreparedData::Synthetic) => {
                return Err(mcfl_core::Error::InvalidDataset("IDX data was not loaded".into()))
            }
        };
        shards.extend(shard_dataset(&train, t.devices_per_cell, &mut rng)?);
        test.push(te);
    }
    let smoothness = smoothness_bound(shards.iter().map(|s| &s.data));
    let eta = match &cfg.eta {
        EtaPolicy::Fixed(v) => v.clone(),
        EtaPolicy::Scale(s) => vec![s / smoothness; t.cells],
    };
    let features = shards[0].data.num_features();
    let world = World {
        topology,
        channel: ChannelParams {
            shared_blocks: cfg.channel.shared_blocks,
            ..ChannelParams::from_db(cfg.channel.alpha, cfg.channel.beta_db)?
        },
        seed: rep_seed(cfg, rep, cfg.redraw.channels),
        redraw_channels: cfg.channel.redraw_each_round,
        receiver_noise: true,
        shards,
        test,
        classes: cfg.data.classes(),
        features,
        budget_dl: cfg.power.dl.clone(),
        budget_ul: cfg.budget_ul(),
        sigma_dl: vec![cfg.noise_dl; cfg.num_devices()],
        sigma_ul: vec![cfg.noise_ul; t.cells],
        kappa: cfg.kappa.clone(),
        smoothness,
        solver_dl: SolverOptions {
            eps: cfg.solver.eps_dl,
            tol: cfg.solver.tol,
        },
        solver_ul: SolverOptions {
            eps: cfg.solver.eps_ul,
            tol: cfg.solver.tol,
        },
        batch_size: cfg.batch_size,
    };
    Ok((world, eta))
}

/// SHA-256 of every gain of a round, as hex.
pub fn channel_digest(channels: &ChannelSet<f64>) -> String {
    let mut h = Sha256::new();
    for row in channels.dl.iter().chain(&channels.ul) {
        for g in row {
            h.update(g.re.to_le_bytes());
            h.update(g.im.to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything one repetition produces.
#[derive(Debug, Clone, Default)]
pub struct RepetitionOutput {
    pub rows: Vec<MetricsRow>,
    pub digests: Vec<DigestRow>,
    pub bounds: Vec<BoundRow>,
}

pub fn run_repetition(cfg: &ExperimentConfig, data: &PreparedData, rep: usize) -> mcfl_core::Result<RepetitionOutput> {
    let (world, eta) = build_world(cfg, data, rep)?;
    let mut out = RepetitionOutput::default();
    for &scheme in &cfg.schemes {
        run_scheme(cfg, &world, &eta, scheme, rep, &mut out)?;
    }
    Ok(out)
}

fn run_scheme(
    cfg: &ExperimentConfig,
    world: &World<f64>,
    eta: &[f64],
    scheme: Scheme,
    rep: usize,
    out: &mut RepetitionOutput,
) -> mcfl_core::Result<()> {
    let name = scheme.to_string();
    let mut state = FlState::new(world, eta.to_vec())?;
    for m in 0..world.topology.num_cells() {
        let (_, acc) = evaluate(&state.models[m], &world.test[m])?;
        out.rows.push(MetricsRow {
            repetition: rep,
            round: 0,
            cell: m + 1,
            scheme: name.clone(),
            train_loss: softmax_loss(&state.models[m], &world.pooled_train(m)?)?,
            test_acc: acc,
            zeta_dl: 0.0,
            zeta_ul: 0.0,
            e_dl: 0.0,
            e_ul: 0.0,
            gap: 0.0,
        });
    }
    for _ in 0..cfg.rounds {
        let r = run_round(&mut state, scheme, world)?;
        out.digests.push(DigestRow {
            repetition: rep,
            round: r.round,
            scheme: name.clone(),
            digest: channel_digest(&r.channels),
        });
        for (m, c) in r.cells.iter().enumerate() {
            out.rows.push(MetricsRow {
                repetition: rep,
                round: r.round,
                cell: m + 1,
                scheme: name.clone(),
                train_loss: c.train_loss,
                test_acc: c.test_acc,
                zeta_dl: r.zeta_dl,
                zeta_ul: r.zeta_ul,
                e_dl: c.e_dl,
                e_ul: c.e_ul,
                gap: c.gap,
            });
        }
    }
    for m in 0..world.topology.num_cells() {
        let devices = world.topology.cell_devices(m).len();
        let check = theorem1_bound(&state.bound_trace(m), world.smoothness, eta[m], devices)?;
        out.bounds.push(BoundRow {
            repetition: rep,
            cell: m + 1,
            scheme: name.clone(),
            lhs: check.lhs,
            rhs: check.rhs(),
        });
    }
    Ok(())
}

/// All repetitions, run in parallel and merged in repetition order.
pub fn run_all(cfg: &ExperimentConfig) -> mcfl_core::Result<RepetitionOutput> {
    let data = prepare_data(cfg)?;
    let parts = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(cfg, &data, rep))
        .collect::<mcfl_core::Result<Vec<_>>>()?;
    let mut all = RepetitionOutput::default();
    for p in parts {
        all.rows.extend(p.rows);
        all.digests.extend(p.digests);
        all.bounds.extend(p.bounds);
    }
    Ok(all)
}

pub fn scheme_names(cfg: &ExperimentConfig) -> Vec<String> {
    cfg.schemes.iter().map(|s| s.to_string()).collect()
}

pub const METRICS_FILE: &str = "metrics.csv";
pub const AVERAGE_FILE: &str = "metrics_avg.csv";
pub const DIGEST_FILE: &str = "digests.csv";
pub const BOUND_FILE: &str = "bounds.csv";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Model(#[from] mcfl_core::Error),
    #[error("writing {path}: {msg}")]
    Write { path: String, msg: String },
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub output: RepetitionOutput,
    pub average: Vec<AverageRow>,
    pub files: Vec<PathBuf>,
}

/// Runs every repetition and writes the metrics, averaged metrics, channel
/// digests and bound checks to `out_dir`. On failure no partial output is
/// left behind.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentSummary, RunError> {
    let output = run_all(cfg)?;
    let avg = average(&output.rows, &scheme_names(cfg));
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| -> Result<(), RunError> {
        fs::create_dir_all(out_dir).map_err(|e| RunError::Write {
            path: out_dir.display().to_string(),
            msg: e.to_string(),
        })?;
        let mut emit = |file: &str, f: &dyn Fn(&mut Vec<u8>) -> csv::Result<()>| -> Result<(), RunError> {
            let path = out_dir.join(file);
            let err = |msg: String| RunError::Write {
                path: path.display().to_string(),
                msg,
            };
            let mut buf = Vec::new();
            f(&mut buf).map_err(|e| err(e.to_string()))?;
            written.push(path.clone());
            fs::write(&path, buf).map_err(|e| err(e.to_string()))
        };
        emit(METRICS_FILE, &|b| write_metrics(b, &output.rows))?;
        emit(AVERAGE_FILE, &|b| write_average(b, &avg))?;
        emit(DIGEST_FILE, &|b| write_digests(b, &output.digests))?;
        emit(BOUND_FILE, &|b| write_bounds(b, &output.bounds))?;
        Ok(())
    })();
    if let Err(e) = result {
        for p in &written {
            let _ = fs::remove_file(p);
        }
        return Err(e);
    }
    Ok(ExperimentSummary {
        output,
        average: avg,
        files: written,
    })
}

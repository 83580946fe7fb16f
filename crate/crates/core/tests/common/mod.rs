#![allow(dead_code)]

use mcfl_core::coopt::SolverOptions;
use mcfl_core::fedlearn::{gaussian_blobs, shard_dataset, smoothness_bound, BlobSpec, Dataset, World};
use mcfl_core::gapmodel::GapProfile;
use mcfl_core::netchan::{sample_topology, ChannelParams, GeometryConfig};
use mcfl_core::rng::{stream, stream_rng};

pub fn dbm(x: f64) -> f64 {
    10f64.powf((x - 30.0) / 10.0)
}

/// A synthetic world on the first `cells` BSs of the four-cell layout.
pub fn synthetic_world(cells: usize, k: usize, classes: usize, features: usize, per_label: usize, seed: u64) -> World<f64> {
    let topology = sample_topology(
        &GeometryConfig::<f64>::hexagonal_quad(cells, k),
        &mut stream_rng(seed, &[stream::TOPOLOGY]),
    )
    .unwrap();
    let mut shards = Vec::new();
    let mut test = Vec::new();
    for m in 0..cells {
        let spec = BlobSpec {
            labels: (0..classes).collect(),
            classes,
            features,
            train_per_label: per_label,
            test_per_label: per_label / 2 + 1,
            spread: 0.3,
        };
        let mut rng = stream_rng(seed, &[stream::DATA, m as u64]);
        let (train, te) = gaussian_blobs::<f64, _>(&spec, &mut rng).unwrap();
        shards.extend(shard_dataset(&train, k, &mut rng).unwrap());
        test.push(te);
    }
    let all: Vec<&Dataset<f64>> = shards.iter().map(|s| &s.data).collect();
    let smoothness = smoothness_bound(all);
    let budget_dl = (0..cells).map(|m| if m == 0 || m == 3 { dbm(40.0) } else { dbm(30.0) }).collect();
    let budget_ul = (0..cells * k).map(|i| if i % k < k / 2 { dbm(15.0) } else { dbm(30.0) }).collect();
    World {
        topology,
        channel: ChannelParams::from_db(2.5, 5.0).unwrap(),
        seed,
        redraw_channels: true,
        receiver_noise: true,
        shards,
        test,
        classes,
        features: features + 1,
        budget_dl,
        budget_ul,
        sigma_dl: vec![dbm(-80.0); cells * k],
        sigma_ul: vec![dbm(-80.0); cells],
        kappa: GapProfile::uniform(cells),
        smoothness,
        solver_dl: SolverOptions::default(),
        solver_ul: SolverOptions::default(),
        batch_size: None,
    }
}

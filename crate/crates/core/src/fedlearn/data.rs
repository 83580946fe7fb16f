//! Labelled datasets, label-sorted sharding and the synthetic blob source.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Feature vectors with labels in `0..classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub features: Vec<Vec<T>>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(features: Vec<Vec<T>>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if let Some(f) = features.first().map(Vec::len) {
            if features.iter().any(|u| u.len() != f) {
                return Err(Error::InvalidDataset("feature rows differ in length".into()));
            }
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        Ok(Self { features, labels, classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
        }
    }

    /// Concatenation of several datasets over the same classes.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Dataset<T>>) -> Result<Self>
    where
        T: 'a,
    {
        let mut out: Option<Self> = None;
        for p in parts {
            match &mut out {
                None => out = Some(p.clone()),
                Some(acc) => {
                    if acc.classes != p.classes || (!p.is_empty() && acc.num_features() != p.num_features()) {
                        return Err(Error::InvalidDataset("cannot concatenate mismatched datasets".into()));
                    }
                    acc.features.extend(p.features.iter().cloned());
                    acc.labels.extend(&p.labels);
                }
            }
        }
        out.ok_or_else(|| Error::InvalidDataset("nothing to concatenate".into()))
    }

    /// Appends the constant-1 bias feature to every sample.
    pub fn with_bias(mut self) -> Self {
        for u in &mut self.features {
            u.push(T::one());
        }
        self
    }
}

/// A device's local dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Shard<T> {
    pub data: Dataset<T>,
    /// Index of the owning device within its cell.
    pub owner: usize,
}

/// Sorts by label, keeps the first `K ⌊N/K⌋` samples, cuts them into `K`
/// contiguous shards and hands the shards to devices in random order.
/// Shard `i` of the result belongs to device `i`.
pub fn shard_dataset<T: Scalar, R: Rng + ?Sized>(dataset: &Dataset<T>, devices: usize, rng: &mut R) -> Result<Vec<Shard<T>>> {
    if devices == 0 || dataset.len() < devices {
        return Err(Error::InvalidDataset(format!(
            "{} samples cannot fill {devices} shards",
            dataset.len()
        )));
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.sort_by_key(|&i| dataset.labels[i]);
    let size = dataset.len() / devices;
    let mut pieces: Vec<Dataset<T>> = order[..size * devices]
        .chunks(size)
        .map(|idx| dataset.subset(idx))
        .collect();
    pieces.shuffle(rng);
    Ok(pieces
        .into_iter()
        .enumerate()
        .map(|(owner, data)| Shard { data, owner })
        .collect())
}

/// Settings of the Gaussian-blob source.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    /// Labels drawn by this source.
    pub labels: Vec<usize>,
    /// Total number of classes of the model.
    pub classes: usize,
    /// Raw features, before the bias is appended.
    pub features: usize,
    pub train_per_label: usize,
    pub test_per_label: usize,
    /// Standard deviation of the samples around their label's centre; the
    /// centres are uniform in the unit cube.
    pub spread: f64,
}

/// Draws a train and a test set of Gaussian blobs. Features are min-max
/// scaled to `[0, 1]` with the training range, test features are clipped to
/// it, and the bias feature is appended to both.
pub fn gaussian_blobs<T: Scalar, R: Rng + ?Sized>(spec: &BlobSpec, rng: &mut R) -> Result<(Dataset<T>, Dataset<T>)> {
    if spec.labels.is_empty() || spec.features == 0 || spec.train_per_label == 0 || spec.test_per_label == 0 {
        return Err(Error::InvalidDataset("blob source needs labels, features and samples".into()));
    }
    if let Some(&label) = spec.labels.iter().find(|&&l| l >= spec.classes) {
        return Err(Error::LabelOutOfRange { label, classes: spec.classes });
    }
    let centres: Vec<Vec<f64>> = spec
        .labels
        .iter()
        .map(|_| (0..spec.features).map(|_| rng.random::<f64>()).collect())
        .collect();
    let draw = |n: usize, rng: &mut R| {
        let mut xs = Vec::with_capacity(n * spec.labels.len());
        let mut ys = Vec::with_capacity(n * spec.labels.len());
        for (centre, &label) in centres.iter().zip(&spec.labels) {
            for _ in 0..n {
                let x: Vec<f64> = centre
                    .iter()
                    .map(|&c| {
                        let z: f64 = StandardNormal.sample(rng);
                        c + spec.spread * z
                    })
                    .collect();
                xs.push(x);
                ys.push(label);
            }
        }
        (xs, ys)
    };
    let (train_x, train_y) = draw(spec.train_per_label, rng);
    let (test_x, test_y) = draw(spec.test_per_label, rng);
    let lo: Vec<f64> = (0..spec.features)
        .map(|f| train_x.iter().map(|x| x[f]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..spec.features)
        .map(|f| train_x.iter().map(|x| x[f]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let scale = |xs: Vec<Vec<f64>>| -> Vec<Vec<T>> {
        xs.into_iter()
            .map(|x| {
                x.iter()
                    .enumerate()
                    .map(|(f, &v)| {
                        let w = hi[f] - lo[f];
                        let s = if w > 0.0 { ((v - lo[f]) / w).clamp(0.0, 1.0) } else { 0.0 };
                        T::lit(s)
                    })
                    .collect()
            })
            .collect()
    };
    let train = Dataset::new(scale(train_x), train_y, spec.classes)?.with_bias();
    let test = Dataset::new(scale(test_x), test_y, spec.classes)?.with_bias();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn labelled(labels: Vec<usize>) -> Dataset<f64> {
        let features = labels.iter().enumerate().map(|(i, _)| vec![i as f64]).collect();
        Dataset::new(features, labels, 2).unwrap()
    }

    #[test]
    fn two_sorted_labels_split_perfectly() {
        let labels: Vec<usize> = (0..100).map(|i| (i * 7) % 2).collect();
        let shards = shard_dataset(&labelled(labels), 2, &mut stream_rng(1, &[0])).unwrap();
        for s in &shards {
            assert_eq!(s.data.len(), 50);
            assert!(s.data.labels.iter().all(|&l| l == s.data.labels[0]));
        }
        assert_ne!(shards[0].data.labels[0], shards[1].data.labels[0]);
    }

    #[test]
    fn shards_cover_the_truncated_sorted_set_once() {
        let labels: Vec<usize> = (0..103).map(|i| (i * 5 + 3) % 2).collect();
        let data = labelled(labels);
        let shards = shard_dataset(&data, 10, &mut stream_rng(2, &[0])).unwrap();
        assert!(shards.iter().all(|s| s.data.len() == 10));
        let mut seen: Vec<u64> = shards
            .iter()
            .flat_map(|s| s.data.features.iter().map(|u| u[0] as u64))
            .collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 100);
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.sort_by_key(|&i| data.labels[i]);
        let mut expect: Vec<u64> = order[..100].iter().map(|&i| i as u64).collect();
        expect.sort_unstable();
        assert_eq!(seen, expect);
    }

    #[test]
    fn too_few_samples() {
        assert!(shard_dataset(&labelled(vec![0, 1]), 3, &mut stream_rng(3, &[0])).is_err());
    }

    #[test]
    fn mismatched_rows_are_rejected() {
        assert!(Dataset::<f64>::new(vec![vec![1.0]], vec![], 2).is_err());
        assert!(Dataset::<f64>::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0, 1], 2).is_err());
        assert!(matches!(
            Dataset::<f64>::new(vec![vec![1.0]], vec![4], 2),
            Err(Error::LabelOutOfRange { label: 4, classes: 2 })
        ));
    }

    #[test]
    fn blobs_are_scaled_with_bias() {
        let spec = BlobSpec {
            labels: vec![2, 3],
            classes: 4,
            features: 6,
            train_per_label: 30,
            test_per_label: 10,
            spread: 0.2,
        };
        let (train, test) = gaussian_blobs::<f64, _>(&spec, &mut stream_rng(4, &[0])).unwrap();
        assert_eq!((train.len(), test.len()), (60, 20));
        assert_eq!(train.num_features(), 7);
        for u in train.features.iter().chain(&test.features) {
            assert_eq!(u[6], 1.0);
            assert!(u[..6].iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
        assert!(train.labels.iter().all(|&l| l == 2 || l == 3));
    }
}

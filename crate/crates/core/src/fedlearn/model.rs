//! Multinomial logistic regression.
//!
//! The parameter vector is class-major: `w = [w_1; …; w_C]` with each block
//! of length `F`, so entry `c·F + f` multiplies feature `f` for class `c`.
//! Labels are `0..C`.

use super::data::{Dataset, Shard};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct LrModel<T> {
    pub classes: usize,
    pub features: usize,
    pub w: Vec<T>,
}

impl<T: Scalar> LrModel<T> {
    pub fn zeros(classes: usize, features: usize) -> Self {
        Self {
            classes,
            features,
            w: vec![T::zero(); classes * features],
        }
    }

    pub fn from_vec(classes: usize, features: usize, w: Vec<T>) -> Result<Self> {
        if w.len() != classes * features {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters for {classes} classes × {features} features",
                w.len()
            )));
        }
        Ok(Self { classes, features, w })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// Class scores `w_cᵀ u`.
    pub fn scores(&self, u: &[T]) -> Vec<T> {
        self.w
            .chunks(self.features)
            .map(|wc| wc.iter().zip(u).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    fn check(&self, batch: &Dataset<T>) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::InvalidDataset("empty batch".into()));
        }
        if batch.num_features() != self.features {
            return Err(Error::DimensionMismatch(format!(
                "batch has {} features, model {}",
                batch.num_features(),
                self.features
            )));
        }
        if let Some(&label) = batch.labels.iter().find(|&&l| l >= self.classes) {
            return Err(Error::LabelOutOfRange {
                label,
                classes: self.classes,
            });
        }
        Ok(())
    }
}

/// Softmax probabilities with the maximum score subtracted first, and the
/// log-normalizer `log Σ exp(score)`.
fn softmax<T: Scalar>(scores: &[T]) -> (Vec<T>, T) {
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = scores.iter().map(|&s| (s - max).exp()).collect();
    let z: T = exps.iter().copied().sum();
    (exps.into_iter().map(|e| e / z).collect(), max + z.ln())
}

/// Mean cross-entropy `−log softmax_{v}(w, u)` over the batch.
pub fn softmax_loss<T: Scalar>(model: &LrModel<T>, batch: &Dataset<T>) -> Result<T> {
    model.check(batch)?;
    let total: T = batch
        .features
        .iter()
        .zip(&batch.labels)
        .map(|(u, &v)| {
            let scores = model.scores(u);
            let (_, log_z) = softmax(&scores);
            log_z - scores[v]
        })
        .sum();
    Ok(total / T::from_count(batch.len()))
}

/// Gradient of [`softmax_loss`]: class block `c` is the batch mean of
/// `−(𝟙{v = c} − softmax_c) u`.
pub fn softmax_grad<T: Scalar>(model: &LrModel<T>, batch: &Dataset<T>) -> Result<Vec<T>> {
    model.check(batch)?;
    let f = model.features;
    let mut g = vec![T::zero(); model.dim()];
    for (u, &v) in batch.features.iter().zip(&batch.labels) {
        let (probs, _) = softmax(&model.scores(u));
        for (c, &pc) in probs.iter().enumerate() {
            let coef = if c == v { pc - T::one() } else { pc };
            for (gi, &ui) in g[c * f..(c + 1) * f].iter_mut().zip(u) {
                *gi += coef * ui;
            }
        }
    }
    let n = T::from_count(batch.len());
    g.iter_mut().for_each(|x| *x /= n);
    Ok(g)
}

/// Local gradient of a device at the received model `w_hat`: full batch by
/// default, otherwise the mean over `batch_size` samples drawn uniformly
/// without replacement.
pub fn local_gradient<T: Scalar, R: Rng + ?Sized>(
    shard: &Shard<T>,
    w_hat: &LrModel<T>,
    batch_size: Option<usize>,
    rng: &mut R,
) -> Result<Vec<T>> {
    if w_hat.w.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("received model".into()));
    }
    match batch_size {
        None => softmax_grad(w_hat, &shard.data),
        Some(b) if b > shard.data.len() => Err(Error::BatchTooLarge {
            batch: b,
            shard: shard.data.len(),
        }),
        Some(b) if b == shard.data.len() => softmax_grad(w_hat, &shard.data),
        Some(b) => {
            let idx = rand::seq::index::sample(rng, shard.data.len(), b).into_vec();
            softmax_grad(w_hat, &shard.data.subset(&idx))
        }
    }
}

/// Mean loss and argmax accuracy on a test set.
pub fn evaluate<T: Scalar>(model: &LrModel<T>, test: &Dataset<T>) -> Result<(T, T)> {
    let loss = softmax_loss(model, test)?;
    let correct = test
        .features
        .iter()
        .zip(&test.labels)
        .filter(|(u, &v)| {
            let s = model.scores(u);
            let best = (0..s.len()).fold(0, |b, c| if s[c] > s[b] { c } else { b });
            best == v
        })
        .count();
    Ok((loss, T::from_count(correct) / T::from_count(test.len())))
}

/// Smoothness constant `max ‖u‖² / 2` of the softmax cross-entropy over the
/// given samples.
pub fn smoothness_bound<'a, T: Scalar + 'a>(datasets: impl IntoIterator<Item = &'a Dataset<T>>) -> T {
    datasets
        .into_iter()
        .flat_map(|d| d.features.iter())
        .map(|u| u.iter().map(|&x| x * x).sum::<T>())
        .fold(T::zero(), T::max)
        / T::lit(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(features: Vec<Vec<f64>>, labels: Vec<usize>) -> Dataset<f64> {
        Dataset::new(features, labels, 3).unwrap()
    }

    #[test]
    fn zero_model_gives_log_classes() {
        let m = LrModel::<f64>::zeros(3, 2);
        let b = batch(vec![vec![0.3, 1.0], vec![-2.0, 0.5]], vec![0, 2]);
        assert!((softmax_loss(&m, &b).unwrap() - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn confident_correct_model_has_vanishing_loss() {
        let m = LrModel::from_vec(3, 1, vec![800.0, 0.0, 0.0]).unwrap();
        let b = batch(vec![vec![1.0]], vec![0]);
        assert!(softmax_loss(&m, &b).unwrap() < 1e-300);
        let wrong = batch(vec![vec![1.0]], vec![1]);
        assert!((softmax_loss(&m, &wrong).unwrap() - 800.0).abs() < 1e-9);
    }

    #[test]
    fn hand_computed_two_class_gradient() {
        let m = LrModel::<f64>::zeros(2, 1);
        let b = Dataset::new(vec![vec![1.0]], vec![0], 2).unwrap();
        assert_eq!(softmax_grad(&m, &b).unwrap(), vec![-0.5, 0.5]);
    }

    #[test]
    fn label_out_of_range() {
        let m = LrModel::<f64>::zeros(2, 1);
        let b = Dataset {
            features: vec![vec![1.0]],
            labels: vec![2],
            classes: 3,
        };
        assert!(matches!(softmax_loss(&m, &b), Err(Error::LabelOutOfRange { label: 2, classes: 2 })));
    }

    #[test]
    fn zero_model_accuracy_on_balanced_binary_set() {
        let m = LrModel::<f64>::zeros(2, 1);
        let b = Dataset::new(vec![vec![1.0]; 4], vec![0, 1, 0, 1], 2).unwrap();
        let (loss, acc) = evaluate(&m, &b).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-14);
        assert_eq!(acc, 0.5);
        let sep = LrModel::from_vec(2, 2, vec![5.0, 0.0, 0.0, 5.0]).unwrap();
        let d = Dataset::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0, 1], 2).unwrap();
        assert_eq!(evaluate(&sep, &d).unwrap().1, 1.0);
    }

    #[test]
    fn smoothness_uses_largest_sample() {
        let a = batch(vec![vec![1.0, 1.0], vec![0.0, 3.0]], vec![0, 1]);
        assert_eq!(smoothness_bound([&a]), 4.5);
    }
}

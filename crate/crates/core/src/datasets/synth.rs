//! Gaussian blob classification data.

use rand::Rng;
use rand_distr::StandardNormal;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{mix, rng_from_seed};

const CENTER_SEED: u64 = 0x5EED_CE17_E125;

/// Unit direction for each class. Depends only on `(num_classes, dim)`, so
/// train and test sets drawn with different seeds share their centers.
fn class_directions(num_classes: usize, dim: usize) -> Vec<Vec<f64>> {
    if num_classes <= dim {
        return (0..num_classes)
            .map(|c| (0..dim).map(|j| if j == c { 1.0 } else { 0.0 }).collect())
            .collect();
    }
    let mut rng = rng_from_seed(mix(&[CENTER_SEED, num_classes as u64, dim as u64]));
    (0..num_classes)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}

/// `n_samples` points split evenly over `num_classes` (remainder to the
/// lowest class ids). Class `c` is drawn from an isotropic unit Gaussian
/// centered at `separation * u_c`.
pub fn synth_blobs(
    n_samples: usize,
    num_classes: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_samples == 0 || dim == 0 {
        return Err(Error::InvalidInput("synth_blobs needs positive sizes".into()));
    }
    if num_classes < 2 {
        return Err(Error::InvalidInput("synth_blobs needs at least two classes".into()));
    }
    let dirs = class_directions(num_classes, dim);
    let mut rng = rng_from_seed(seed);
    let mut features = Vec::with_capacity(n_samples * dim);
    let mut labels = Vec::with_capacity(n_samples);
    let base = n_samples / num_classes;
    let extra = n_samples % num_classes;
    for (c, dir) in dirs.iter().enumerate() {
        let count = base + usize::from(c < extra);
        for _ in 0..count {
            for &u in dir {
                let noise: f64 = rng.sample(StandardNormal);
                features.push((separation * u + noise) as f32);
            }
            labels.push(c as u32);
        }
    }
    Dataset::new(features, labels, dim, num_classes)
}

/// Train and test sets sharing class centers but drawn from separate streams.
pub fn synth_blobs_split(
    n_train: usize,
    n_test: usize,
    num_classes: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    Ok((
        synth_blobs(n_train, num_classes, dim, separation, mix(&[seed, 0]))?,
        synth_blobs(n_test, num_classes, dim, separation, mix(&[seed, 1]))?,
    ))
}

/// Accuracy on `test` of the nearest class mean estimated from `train`.
pub fn nearest_centroid_accuracy(train: &Dataset, test: &Dataset) -> f64 {
    let c = train.num_classes();
    let d = train.dim();
    let mut sums = vec![vec![0.0f64; d]; c];
    let mut counts = vec![0usize; c];
    for i in 0..train.len() {
        let y = train.labels()[i] as usize;
        counts[y] += 1;
        for (s, &v) in sums[y].iter_mut().zip(train.row(i)) {
            *s += f64::from(v);
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        s.iter_mut().for_each(|v| *v /= n.max(1) as f64);
    }
    let correct = (0..test.len())
        .filter(|&i| {
            let x = test.row(i);
            let best = (0..c)
                .filter(|&k| counts[k] > 0)
                .min_by(|&a, &b| {
                    let da: f64 = sums[a].iter().zip(x).map(|(m, &v)| (m - f64::from(v)).powi(2)).sum();
                    let db: f64 = sums[b].iter().zip(x).map(|(m, &v)| (m - f64::from(v)).powi(2)).sum();
                    da.total_cmp(&db)
                })
                .unwrap_or(0);
            best == test.labels()[i] as usize
        })
        .count();
    correct as f64 / test.len() as f64
}

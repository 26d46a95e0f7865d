//! Multilayer perceptron with ReLU hidden layers, softmax output and
//! cross-entropy loss, trained by minibatch SGD.
//!
//! Layer `k` is stored as two tensors, `fc{k}.weight` with shape
//! `(fan_in, fan_out)` and `fc{k}.bias` with shape `(fan_out)`, so a forward
//! pass is `x · W + b` with row-vector samples.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::params::{ParamSet, Tensor};
use crate::rng::{mix, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub hidden_dims: [usize; 2],
    pub num_classes: usize,
}

impl MlpArchitecture {
    pub fn new(input_dim: usize, hidden_dims: [usize; 2], num_classes: usize) -> Result<Self> {
        if input_dim == 0 || hidden_dims.contains(&0) {
            return Err(Error::config("model.hidden", "layer widths must be positive"));
        }
        if num_classes < 2 {
            return Err(Error::config("model", format!("need at least 2 classes, got {num_classes}")));
        }
        Ok(MlpArchitecture {
            input_dim,
            hidden_dims,
            num_classes,
        })
    }

    /// `(fan_in, fan_out)` for each layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let widths = [self.input_dim, self.hidden_dims[0], self.hidden_dims[1], self.num_classes];
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Local SGD settings. Defaults are the MNIST values `η = 0.01`, `B = 64`, `E = 5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f32,
    pub batch_size: usize,
    pub local_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            batch_size: 64,
            local_epochs: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("train.learning_rate", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be positive"));
        }
        if self.local_epochs == 0 {
            return Err(Error::config("train.local_epochs", "must be positive"));
        }
        Ok(())
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(arch: &MlpArchitecture, seed: u64) -> ParamSet {
    let mut rng = rng_from_seed(seed);
    let mut tensors = Vec::new();
    for (k, (fan_in, fan_out)) in arch.layer_dims().into_iter().enumerate() {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt() as f32;
        let weights = (0..fan_in * fan_out).map(|_| rng.gen_range(-limit..=limit)).collect();
        tensors.push(Tensor {
            name: format!("fc{}.weight", k + 1),
            shape: vec![fan_in, fan_out],
            values: weights,
        });
        tensors.push(Tensor::zeros(format!("fc{}.bias", k + 1), vec![fan_out]));
    }
    ParamSet::new(tensors).expect("generated names are unique")
}

struct Layer<'a> {
    weight: ArrayView2<'a, f32>,
    bias: ArrayView1<'a, f32>,
}

fn layers(params: &ParamSet) -> Result<Vec<Layer<'_>>> {
    let t = params.tensors();
    if t.is_empty() || t.len() % 2 != 0 {
        return Err(Error::Shape(format!(
            "MLP parameters come in weight/bias pairs, got {} tensors",
            t.len()
        )));
    }
    let mut out = Vec::with_capacity(t.len() / 2);
    for pair in t.chunks(2) {
        let (w, b) = (&pair[0], &pair[1]);
        if w.shape.len() != 2 || b.shape.len() != 1 || b.shape[0] != w.shape[1] {
            return Err(Error::Shape(format!(
                "`{}` {:?} and `{}` {:?} are not a weight/bias pair",
                w.name, w.shape, b.name, b.shape
            )));
        }
        if let Some(prev) = out.last() {
            let prev: &Layer = prev;
            if prev.weight.ncols() != w.shape[0] {
                return Err(Error::Shape(format!("`{}` does not chain with the previous layer", w.name)));
            }
        }
        out.push(Layer {
            weight: ArrayView2::from_shape((w.shape[0], w.shape[1]), &w.values).expect("checked"),
            bias: ArrayView1::from(&b.values[..]),
        });
    }
    Ok(out)
}

/// Outputs of every layer: ReLU activations for hidden layers, logits last.
fn activations(layers: &[Layer<'_>], x: ArrayView2<'_, f32>) -> Result<Vec<Array2<f32>>> {
    if x.ncols() != layers[0].weight.nrows() {
        return Err(Error::Shape(format!(
            "input has {} features, model expects {}",
            x.ncols(),
            layers[0].weight.nrows()
        )));
    }
    let mut acts: Vec<Array2<f32>> = Vec::with_capacity(layers.len());
    for (k, layer) in layers.iter().enumerate() {
        let mut z = if k == 0 {
            x.dot(&layer.weight)
        } else {
            acts[k - 1].dot(&layer.weight)
        };
        z += &layer.bias;
        if k + 1 < layers.len() {
            z.mapv_inplace(|v| v.max(0.0));
        }
        acts.push(z);
    }
    Ok(acts)
}

fn softmax_rows(logits: &mut Array2<f32>) {
    for mut row in logits.rows_mut() {
        let max = row.fold(f32::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

/// `-log softmax(logits)[label]`, computed stably in `f64`.
fn row_cross_entropy(logits: ArrayView1<'_, f32>, label: usize) -> f64 {
    let max = logits.fold(f32::NEG_INFINITY, |m, &v| m.max(v)) as f64;
    let lse = logits.iter().map(|&v| (v as f64 - max).exp()).sum::<f64>().ln() + max;
    lse - logits[label] as f64
}

fn check_labels(labels: &[u32], n_rows: usize, n_classes: usize) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    if labels.len() != n_rows {
        return Err(Error::Shape(format!("{} labels for {n_rows} samples", labels.len())));
    }
    if let Some(y) = labels.iter().find(|&&y| y as usize >= n_classes) {
        return Err(Error::InvalidInput(format!("label {y} out of range for {n_classes} classes")));
    }
    Ok(())
}

/// Class probabilities, one softmax row per sample.
pub fn forward(params: &ParamSet, features: ArrayView2<'_, f32>) -> Result<Array2<f32>> {
    let layers = layers(params)?;
    let mut out = activations(&layers, features)?.pop().expect("at least one layer");
    softmax_rows(&mut out);
    Ok(out)
}

/// Mean cross-entropy over the batch and its gradient.
pub fn backward(params: &ParamSet, features: ArrayView2<'_, f32>, labels: &[u32]) -> Result<(f64, ParamSet)> {
    let layers = layers(params)?;
    let n_classes = layers.last().expect("non-empty").weight.ncols();
    check_labels(labels, features.nrows(), n_classes)?;
    let acts = activations(&layers, features)?;
    let n = labels.len();

    let logits = acts.last().expect("non-empty");
    let loss = logits
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(row, &y)| row_cross_entropy(row, y as usize))
        .sum::<f64>()
        / n as f64;

    let mut delta = logits.clone();
    softmax_rows(&mut delta);
    for (mut row, &y) in delta.rows_mut().into_iter().zip(labels) {
        row[y as usize] -= 1.0;
    }
    delta /= n as f32;

    let mut grads: Vec<(Array2<f32>, Array1<f32>)> = Vec::with_capacity(layers.len());
    for k in (0..layers.len()).rev() {
        let dw = if k == 0 {
            features.t().dot(&delta)
        } else {
            acts[k - 1].t().dot(&delta)
        };
        let db = delta.sum_axis(Axis(0));
        if k > 0 {
            let mut upstream = delta.dot(&layers[k].weight.t());
            ndarray::Zip::from(&mut upstream)
                .and(&acts[k - 1])
                .for_each(|g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
            delta = upstream;
        }
        grads.push((dw, db));
    }
    grads.reverse();

    let mut out = params.clone();
    for (pair, (dw, db)) in out.tensors_mut().chunks_mut(2).zip(grads) {
        pair[0].values = dw.iter().copied().collect();
        pair[1].values = db.to_vec();
    }
    Ok((loss, out))
}

/// Number of argmax-correct rows (ties go to the lowest class) and summed
/// cross-entropy.
pub fn score_batch(params: &ParamSet, features: ArrayView2<'_, f32>, labels: &[u32]) -> Result<(usize, f64)> {
    let layers = layers(params)?;
    let n_classes = layers.last().expect("non-empty").weight.ncols();
    check_labels(labels, features.nrows(), n_classes)?;
    let logits = activations(&layers, features)?.pop().expect("non-empty");
    let mut correct = 0;
    let mut loss = 0.0;
    for (row, &y) in logits.rows().into_iter().zip(labels) {
        let mut best = 0;
        for (c, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = c;
            }
        }
        correct += usize::from(best == y as usize);
        loss += row_cross_entropy(row, y as usize);
    }
    Ok((correct, loss))
}

/// `E` epochs of minibatch SGD from `start`. Each epoch reshuffles with a
/// generator seeded from `(rng_seed, epoch)`; the final short batch is kept.
pub fn local_train(start: &ParamSet, data: &Dataset, cfg: &TrainConfig, rng_seed: u64) -> Result<ParamSet> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidInput("client dataset is empty".into()));
    }
    let features = data.features();
    let mut params = start.clone();
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..cfg.local_epochs {
        let mut rng = rng_from_seed(mix(&[rng_seed, epoch as u64]));
        order.sort_unstable();
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let x = features.select(Axis(0), batch);
            let y: Vec<u32> = batch.iter().map(|&i| data.labels()[i]).collect();
            let (_, grads) = backward(&params, x.view(), &y)?;
            params.axpy(-cfg.learning_rate, &grads)?;
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::synth_blobs;

    fn arch(d: usize, h: [usize; 2], c: usize) -> MlpArchitecture {
        MlpArchitecture::new(d, h, c).unwrap()
    }

    #[test]
    fn mnist_shapes() {
        let p = init_params(&arch(784, [128, 64], 10), 42);
        let shapes: Vec<_> = p.tensors().iter().map(|t| t.shape.clone()).collect();
        assert_eq!(
            shapes,
            vec![vec![784, 128], vec![128], vec![128, 64], vec![64], vec![64, 10], vec![10]]
        );
    }

    #[test]
    fn init_is_glorot_with_zero_bias_and_deterministic() {
        let a = arch(20, [7, 5], 3);
        let p = init_params(&a, 1);
        assert_eq!(p, init_params(&a, 1));
        assert_ne!(p, init_params(&a, 2));
        for (t, (fi, fo)) in p.tensors().chunks(2).zip(a.layer_dims()) {
            let limit = (6.0 / (fi + fo) as f64).sqrt() as f32;
            assert!(t[0].values.iter().all(|v| v.abs() <= limit));
            assert!(t[1].values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn zero_net_predicts_uniform() {
        let p = init_params(&arch(3, [4, 4], 5), 0).zeros_like();
        let x = Array2::from_shape_fn((6, 3), |(i, j)| (i * 3 + j) as f32 - 4.0);
        let probs = forward(&p, x.view()).unwrap();
        assert!(probs.iter().all(|&v| (v - 0.2).abs() < 1e-7));
    }

    #[test]
    fn rows_sum_to_one() {
        let p = init_params(&arch(8, [16, 16], 10), 3);
        let x = Array2::from_shape_fn((1, 8), |(_, j)| j as f32 * 0.3);
        let probs = forward(&p, x.view()).unwrap();
        assert!((probs.sum() - 1.0).abs() < 1e-6);
        assert!(probs.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let p = init_params(&arch(8, [4, 4], 3), 3);
        assert!(forward(&p, Array2::zeros((2, 7)).view()).is_err());
    }

    #[test]
    fn uniform_prediction_loss_is_ln_classes() {
        let p = init_params(&arch(5, [3, 3], 10), 0).zeros_like();
        let x = Array2::from_elem((4, 5), 0.7f32);
        let (loss, grads) = backward(&p, x.view(), &[0, 3, 9, 2]).unwrap();
        assert!((loss - 10f64.ln()).abs() < 1e-6);
        assert!(grads.same_structure(&p));
    }

    #[test]
    fn backward_rejects_empty_and_bad_labels() {
        let p = init_params(&arch(2, [2, 2], 2), 0);
        assert!(backward(&p, Array2::zeros((0, 2)).view(), &[]).is_err());
        assert!(backward(&p, Array2::zeros((1, 2)).view(), &[2]).is_err());
    }

    #[test]
    fn duplicated_batch_has_same_loss_and_grads() {
        let p = init_params(&arch(4, [6, 5], 3), 8);
        let x = Array2::from_shape_fn((3, 4), |(i, j)| ((i + 1) * (j + 2)) as f32 * 0.1 - 0.4);
        let y = [0, 2, 1];
        let x2 = ndarray::concatenate(Axis(0), &[x.view(), x.view()]).unwrap();
        let (l1, g1) = backward(&p, x.view(), &y).unwrap();
        let (l2, g2) = backward(&p, x2.view(), &[0, 2, 1, 0, 2, 1]).unwrap();
        assert!((l1 - l2).abs() < 1e-6);
        for (a, b) in g1.values().zip(g2.values()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn single_sample_single_step_is_plain_sgd() {
        let a = arch(3, [4, 4], 2);
        let p = init_params(&a, 5);
        let data = Dataset::new(vec![0.5, -1.0, 2.0], vec![1], 3, 2).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.1,
            batch_size: 1,
            local_epochs: 1,
        };
        let trained = local_train(&p, &data, &cfg, 0).unwrap();
        let (_, g) = backward(&p, data.features(), data.labels()).unwrap();
        let mut expected = p.clone();
        expected.axpy(-0.1, &g).unwrap();
        assert_eq!(trained, expected);
    }

    #[test]
    fn full_batch_epoch_matches_gradient_step() {
        let a = arch(2, [5, 5], 4);
        let p = init_params(&a, 11);
        let data = synth_blobs(37, 4, 2, 2.0, 1).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.05,
            batch_size: 64,
            local_epochs: 1,
        };
        let trained = local_train(&p, &data, &cfg, 3).unwrap();
        // shuffling a full batch only reorders the mean
        let (_, g) = backward(&p, data.features(), data.labels()).unwrap();
        for ((t, p0), gi) in trained.values().zip(p.values()).zip(g.values()) {
            assert!((t - (p0 - 0.05 * gi)).abs() < 1e-6);
        }
    }

    #[test]
    fn training_is_deterministic_and_pure() {
        let a = arch(4, [8, 8], 2);
        let p = init_params(&a, 1);
        let snapshot = p.clone();
        let data = synth_blobs(50, 2, 4, 2.0, 9).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.05,
            batch_size: 8,
            local_epochs: 2,
        };
        let t1 = local_train(&p, &data, &cfg, 77).unwrap();
        let t2 = local_train(&p, &data, &cfg, 77).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(p, snapshot);
        assert_ne!(t1, local_train(&p, &data, &cfg, 78).unwrap());
    }

    #[test]
    fn learns_separable_gaussians() {
        let a = arch(4, [8, 8], 2);
        let data = synth_blobs(200, 2, 4, 4.0, 21).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.05,
            batch_size: 16,
            local_epochs: 20,
        };
        let trained = local_train(&init_params(&a, 2), &data, &cfg, 5).unwrap();
        let (correct, _) = score_batch(&trained, data.features(), data.labels()).unwrap();
        assert!(correct as f64 / 200.0 > 0.95, "{correct}");
    }
}

//! Independent reference implementations used as test oracles. These are
//! deliberately naive: brute force, sort-based, or plain f64 loops.
#![allow(dead_code)]

use std::path::PathBuf;

use fedcredit::params::{ParamSet, Tensor};
use fedcredit::simulator::DatasetSource;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random parameter sets sharing one structure of up to two tensors whose
/// total size is `dim`.
pub fn random_sets(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<ParamSet> {
    let split = if dim > 1 && rng.gen_bool(0.5) { rng.gen_range(1..dim) } else { dim };
    (0..n)
        .map(|_| {
            let mut values: Vec<f32> = (0..dim).map(|_| rng.gen_range(-3.0f32..3.0)).collect();
            // occasional exact duplicates exercise tie handling
            if rng.gen_bool(0.1) {
                values.iter_mut().for_each(|v| *v = v.round());
            }
            let mut tensors = vec![Tensor::new("a", vec![split], values[..split].to_vec()).unwrap()];
            if split < dim {
                tensors.push(Tensor::new("b", vec![dim - split], values[split..].to_vec()).unwrap());
            }
            ParamSet::new(tensors).unwrap()
        })
        .collect()
}

pub fn flat(p: &ParamSet) -> Vec<f32> {
    p.values().collect()
}

pub fn bits(p: &ParamSet) -> Vec<u32> {
    p.values().map(f32::to_bits).collect()
}

fn column(sets: &[ParamSet], j: usize) -> Vec<f32> {
    let mut c: Vec<f32> = sets.iter().map(|s| flat(s)[j]).collect();
    c.sort_by(|a, b| a.partial_cmp(b).unwrap());
    c
}

pub fn median_oracle(sets: &[ParamSet]) -> Vec<f32> {
    let dim = sets[0].num_values();
    (0..dim)
        .map(|j| {
            let c = column(sets, j);
            let n = c.len();
            if n % 2 == 1 {
                c[n / 2]
            } else {
                ((c[n / 2 - 1] as f64 + c[n / 2] as f64) / 2.0) as f32
            }
        })
        .collect()
}

pub fn trimmed_oracle(sets: &[ParamSet], k: usize) -> Vec<f32> {
    let dim = sets[0].num_values();
    (0..dim)
        .map(|j| {
            let c = column(sets, j);
            let kept = &c[k..c.len() - k];
            let mut s = 0.0f64;
            for &v in kept {
                s += v as f64;
            }
            (s / kept.len() as f64) as f32
        })
        .collect()
}

/// `Σ_i w_i x_i[j]` per coordinate, in client order.
pub fn dot_oracle(sets: &[ParamSet], weights: &[f64]) -> Vec<f64> {
    let dim = sets[0].num_values();
    let rows: Vec<Vec<f32>> = sets.iter().map(flat).collect();
    (0..dim)
        .map(|j| {
            let mut s = 0.0f64;
            for (row, w) in rows.iter().zip(weights) {
                s += w * row[j] as f64;
            }
            s
        })
        .collect()
}

/// Brute-force Krum scores over all pairs.
pub fn krum_scores_oracle(sets: &[ParamSet], f: usize) -> Vec<f64> {
    let rows: Vec<Vec<f32>> = sets.iter().map(flat).collect();
    let n = rows.len();
    (0..n)
        .map(|i| {
            let mut d: Vec<f64> = Vec::new();
            for j in 0..n {
                if j != i {
                    d.push(rows[i].iter().zip(&rows[j]).map(|(a, b)| (*a as f64 - *b as f64).powi(2)).sum());
                }
            }
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            d.iter().take(n - f - 2).sum()
        })
        .collect()
}

/// Indices by (score, index).
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap().then(a.cmp(&b)));
    idx
}

pub fn sum_of_distances(points: &[[f64; 2]], x: [f64; 2]) -> f64 {
    points.iter().map(|p| ((p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)).sqrt()).sum()
}

/// Geometric median in the plane by grid search followed by compass
/// refinement. The objective is convex, so this converges to the minimum.
pub fn geomed_oracle_2d(points: &[[f64; 2]]) -> f64 {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let steps = 200;
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for a in 0..=steps {
        for b in 0..=steps {
            let x = [
                lo[0] + (hi[0] - lo[0]) * a as f64 / steps as f64,
                lo[1] + (hi[1] - lo[1]) * b as f64 / steps as f64,
            ];
            let v = sum_of_distances(points, x);
            if v < best.0 {
                best = (v, x);
            }
        }
    }
    // the data points themselves are candidate minima
    for p in points {
        let v = sum_of_distances(points, *p);
        if v < best.0 {
            best = (v, *p);
        }
    }
    let mut step = ((hi[0] - lo[0]).max(hi[1] - lo[1]) / steps as f64).max(1e-3);
    while step > 1e-12 {
        let mut improved = false;
        for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
            let x = [best.1[0] + dx * step, best.1[1] + dy * step];
            let v = sum_of_distances(points, x);
            if v < best.0 {
                best = (v, x);
                improved = true;
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    best.0
}

/// Mean cross-entropy of an MLP evaluated entirely in f64.
/// `layers` holds `(weight row-major fan_in x fan_out, bias)`.
pub fn mlp_loss_f64(layers: &[(Vec<f64>, Vec<f64>, usize, usize)], x: &[Vec<f64>], y: &[u32]) -> f64 {
    let mut total = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let mut h = row.clone();
        for (k, (w, b, fan_in, fan_out)) in layers.iter().enumerate() {
            let mut z = b.clone();
            for i in 0..*fan_in {
                for o in 0..*fan_out {
                    z[o] += h[i] * w[i * fan_out + o];
                }
            }
            if k + 1 < layers.len() {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            h = z;
        }
        let max = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = h.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        total += lse - h[label as usize];
    }
    total / x.len() as f64
}

pub fn f64_layers(p: &ParamSet) -> Vec<(Vec<f64>, Vec<f64>, usize, usize)> {
    p.tensors()
        .chunks(2)
        .map(|pair| {
            let (w, b) = (&pair[0], &pair[1]);
            (
                w.values.iter().map(|&v| v as f64).collect(),
                b.values.iter().map(|&v| v as f64).collect(),
                w.shape[0],
                w.shape[1],
            )
        })
        .collect()
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join("mnist-subset")
}

/// The bundled MNIST subset, first `train` training and `test` test images.
pub fn mnist_subset(train: usize, test: usize) -> DatasetSource {
    let d = data_dir();
    DatasetSource::Idx {
        train_images: d.join("train-images-idx3-ubyte.gz"),
        train_labels: d.join("train-labels-idx1-ubyte.gz"),
        test_images: d.join("t10k-images-idx3-ubyte.gz"),
        test_labels: d.join("t10k-labels-idx1-ubyte.gz"),
        train_limit: Some(train),
        test_limit: Some(test),
    }
}

pub fn median_of(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

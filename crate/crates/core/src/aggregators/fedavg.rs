use crate::error::{Error, Result};
use crate::params::{check_uniform, ParamSet};

/// `Σ w_i θ_i`, accumulated in `f64` in client order.
pub fn weighted_combination(locals: &[ParamSet], weights: &[f64]) -> Result<ParamSet> {
    check_uniform(locals)?;
    if weights.len() != locals.len() {
        return Err(Error::Shape(format!(
            "{} weights for {} parameter sets",
            weights.len(),
            locals.len()
        )));
    }
    let mut acc = vec![0.0f64; locals[0].num_values()];
    for (local, &w) in locals.iter().zip(weights) {
        for (a, v) in acc.iter_mut().zip(local.values()) {
            *a += w * f64::from(v);
        }
    }
    locals[0].with_flat_f64(&acc)
}

/// Unweighted coordinate-wise mean.
pub fn mean(locals: &[ParamSet]) -> Result<ParamSet> {
    let n = locals.len();
    weighted_combination(locals, &vec![1.0 / n.max(1) as f64; n])
}

/// Dataset-size-weighted mean.
pub fn fedavg(locals: &[ParamSet], sizes: &[usize]) -> Result<ParamSet> {
    if sizes.len() != locals.len() {
        return Err(Error::Shape(format!(
            "{} sizes for {} parameter sets",
            sizes.len(),
            locals.len()
        )));
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidInput("client dataset sizes must be positive".into()));
    }
    let total: usize = sizes.iter().sum();
    let weights: Vec<f64> = sizes.iter().map(|&s| s as f64 / total as f64).collect();
    weighted_combination(locals, &weights)
}

use super::{flatten_all, norm};
use crate::error::{Error, Result};
use crate::params::ParamSet;

#[derive(Debug, Clone, PartialEq)]
pub struct WeiszfeldOutcome {
    pub point: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `Σ ‖x - p_i‖` at the starting mean and after every iteration.
    pub objective_trace: Vec<f64>,
}

fn objective(x: &[f64], points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|p| p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .sum()
}

/// Weiszfeld iteration from the coordinate-wise mean. Each point is weighted
/// by `1 / max(‖x - p_i‖, tol)`; iteration stops once the step is shorter
/// than `tol` or after `max_iters` steps.
pub fn weiszfeld(points: &[Vec<f64>], tol: f64, max_iters: usize) -> Result<WeiszfeldOutcome> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidInput("geometric median of no points".into()))?;
    if !(tol > 0.0) {
        return Err(Error::config("aggregator.tol", "must be positive"));
    }
    let dim = first.len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Shape("points differ in dimension".into()));
    }
    let n = points.len() as f64;
    let mut x = vec![0.0f64; dim];
    for p in points {
        for (a, v) in x.iter_mut().zip(p) {
            *a += v / n;
        }
    }
    let mut trace = vec![objective(&x, points)];
    let mut next = vec![0.0f64; dim];
    for iter in 1..=max_iters {
        next.iter_mut().for_each(|v| *v = 0.0);
        let mut total_weight = 0.0;
        for p in points {
            let d = p.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let w = 1.0 / d.max(tol);
            total_weight += w;
            for (a, v) in next.iter_mut().zip(p) {
                *a += w * v;
            }
        }
        next.iter_mut().for_each(|v| *v /= total_weight);
        let step = norm(&next.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
        std::mem::swap(&mut x, &mut next);
        trace.push(objective(&x, points));
        if step < tol {
            return Ok(WeiszfeldOutcome {
                point: x,
                iterations: iter,
                converged: true,
                objective_trace: trace,
            });
        }
    }
    Ok(WeiszfeldOutcome {
        point: x,
        iterations: max_iters,
        converged: false,
        objective_trace: trace,
    })
}

/// Geometric median of the flattened updates.
pub fn geometric_median(locals: &[ParamSet], tol: f64, max_iters: usize) -> Result<ParamSet> {
    let flat = flatten_all(locals)?;
    let out = weiszfeld(&flat, tol, max_iters)?;
    locals[0].with_flat_f64(&out.point)
}

use super::{check_krum, check_multi_krum_m, flatten_all, squared_distance};
use crate::error::Result;
use crate::params::ParamSet;

/// Krum score of every update: the sum of squared distances to its
/// `n - f - 2` nearest other updates.
pub fn krum_scores(locals: &[ParamSet], f: usize) -> Result<Vec<f64>> {
    let flat = flatten_all(locals)?;
    let n = flat.len();
    check_krum(n, f)?;
    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = squared_distance(&flat[i], &flat[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let neighbours = n - f - 2;
    Ok((0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dist[i * n + j]).collect();
            row.sort_unstable_by(f64::total_cmp);
            row[..neighbours].iter().sum()
        })
        .collect())
}

/// Client indices ordered by ascending score, ties by index.
fn ranked(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    idx
}

/// Index of the update Krum selects.
pub fn krum_select(locals: &[ParamSet], f: usize) -> Result<usize> {
    Ok(ranked(&krum_scores(locals, f)?)[0])
}

pub fn krum(locals: &[ParamSet], f: usize) -> Result<ParamSet> {
    Ok(locals[krum_select(locals, f)?].clone())
}

/// Unweighted mean of the `m` best-scoring updates.
pub fn multi_krum(locals: &[ParamSet], f: usize, m: usize) -> Result<ParamSet> {
    let scores = krum_scores(locals, f)?;
    check_multi_krum_m(locals.len(), f, m)?;
    let chosen: Vec<ParamSet> = ranked(&scores)[..m].iter().map(|&i| locals[i].clone()).collect();
    super::mean(&chosen)
}

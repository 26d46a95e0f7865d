use super::{check_trim, flatten_all};
use crate::error::Result;
use crate::params::ParamSet;

/// Apply `reduce` to the sorted client values of every coordinate.
fn per_coordinate(locals: &[ParamSet], mut reduce: impl FnMut(&[f64]) -> f64) -> Result<ParamSet> {
    let flat = flatten_all(locals)?;
    let dim = flat[0].len();
    let mut column = vec![0.0f64; flat.len()];
    let mut out = Vec::with_capacity(dim);
    for j in 0..dim {
        for (slot, client) in column.iter_mut().zip(&flat) {
            *slot = client[j];
        }
        column.sort_unstable_by(f64::total_cmp);
        out.push(reduce(&column));
    }
    locals[0].with_flat_f64(&out)
}

/// Coordinate-wise median; even counts average the two central values.
pub fn coordinate_median(locals: &[ParamSet]) -> Result<ParamSet> {
    per_coordinate(locals, |sorted| {
        let n = sorted.len();
        if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        }
    })
}

/// Coordinate-wise mean after dropping the `k` largest and `k` smallest values.
pub fn trimmed_mean(locals: &[ParamSet], k: usize) -> Result<ParamSet> {
    check_trim(locals.len(), k)?;
    per_coordinate(locals, |sorted| {
        let kept = &sorted[k..sorted.len() - k];
        kept.iter().sum::<f64>() / kept.len() as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Tensor;

    fn scalars(vs: &[f32]) -> Vec<ParamSet> {
        vs.iter()
            .map(|&v| ParamSet::new(vec![Tensor::new("x", vec![1], vec![v]).unwrap()]).unwrap())
            .collect()
    }

    fn only(p: &ParamSet) -> f32 {
        p.values().next().unwrap()
    }

    #[test]
    fn odd_and_even_median() {
        assert_eq!(only(&coordinate_median(&scalars(&[1.0, 9.0, 2.0])).unwrap()), 2.0);
        assert_eq!(only(&coordinate_median(&scalars(&[3.0, 1.0])).unwrap()), 2.0);
        assert_eq!(only(&coordinate_median(&scalars(&[-4.0])).unwrap()), -4.0);
    }

    #[test]
    fn symmetric_trim() {
        let out = trimmed_mean(&scalars(&[-100.0, 1.0, 2.0, 3.0, 100.0]), 1).unwrap();
        assert_eq!(only(&out), 2.0);
    }

    #[test]
    fn zero_trim_is_mean() {
        let out = trimmed_mean(&scalars(&[1.0, 3.0, 8.0]), 0).unwrap();
        assert_eq!(only(&out), 4.0);
    }

    #[test]
    fn trim_precondition() {
        assert!(trimmed_mean(&scalars(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap_err().is_config_error());
    }

    #[test]
    fn survives_non_finite_uploads() {
        let out = coordinate_median(&scalars(&[1.0, f32::INFINITY, 2.0, f32::NAN, 1.5])).unwrap();
        assert!(only(&out).is_finite());
    }
}

//! Baseline aggregation rules.
//!
//! Every rule takes the clients' uploaded parameter sets and returns the next
//! global set. Reductions run in `f64` in ascending client order and the
//! result is rounded back to `f32` once.

mod fedavg;
mod fltrust;
mod geomed;
mod krum;
mod median;

pub use fedavg::{fedavg, mean, weighted_combination};
pub use fltrust::fltrust;
pub use geomed::{geometric_median, weiszfeld, WeiszfeldOutcome};
pub use krum::{krum, krum_scores, krum_select, multi_krum};
pub use median::{coordinate_median, trimmed_mean};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{check_uniform, ParamSet};

pub const DEFAULT_GEOMED_TOL: f64 = 1e-6;
pub const DEFAULT_GEOMED_MAX_ITERS: usize = 100;
pub const DEFAULT_FLTRUST_ROOT_SIZE: usize = 100;

/// Server aggregation rule. `None` for `f`, `m` or `k` means "use the
/// experiment's true attacker count" (and `n - f - 2` for `m`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum AggregatorSpec {
    #[serde(rename = "fedavg")]
    FedAvg,
    #[serde(rename = "krum")]
    Krum {
        #[serde(default)]
        f: Option<usize>,
    },
    #[serde(rename = "multi_krum")]
    MultiKrum {
        #[serde(default)]
        f: Option<usize>,
        #[serde(default)]
        m: Option<usize>,
    },
    #[serde(rename = "median")]
    Median,
    #[serde(rename = "trimmed")]
    Trimmed {
        #[serde(default)]
        k: Option<usize>,
    },
    #[serde(rename = "geomed")]
    GeoMed {
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_max_iters")]
        max_iters: usize,
    },
    #[serde(rename = "fltrust")]
    FlTrust {
        #[serde(default = "default_root_size")]
        root_size: usize,
    },
    #[serde(rename = "fedcredit")]
    FedCredit {
        #[serde(default = "default_alpha1")]
        alpha1: f64,
        #[serde(default = "default_alpha2")]
        alpha2: f64,
        #[serde(default = "default_beta")]
        beta: f64,
    },
}

fn default_tol() -> f64 {
    DEFAULT_GEOMED_TOL
}
fn default_max_iters() -> usize {
    DEFAULT_GEOMED_MAX_ITERS
}
fn default_root_size() -> usize {
    DEFAULT_FLTRUST_ROOT_SIZE
}
fn default_alpha1() -> f64 {
    crate::credibility::DEFAULT_ALPHA1
}
fn default_alpha2() -> f64 {
    crate::credibility::DEFAULT_ALPHA2
}
fn default_beta() -> f64 {
    crate::credibility::DEFAULT_BETA
}

impl AggregatorSpec {
    pub fn fed_credit() -> Self {
        AggregatorSpec::FedCredit {
            alpha1: default_alpha1(),
            alpha2: default_alpha2(),
            beta: default_beta(),
        }
    }

    pub fn geomed() -> Self {
        AggregatorSpec::GeoMed {
            tol: DEFAULT_GEOMED_TOL,
            max_iters: DEFAULT_GEOMED_MAX_ITERS,
        }
    }

    /// Display name used in summaries.
    pub fn name(&self) -> &'static str {
        match self {
            AggregatorSpec::FedAvg => "FedAvg",
            AggregatorSpec::Krum { .. } => "Krum",
            AggregatorSpec::MultiKrum { .. } => "Multi-Krum",
            AggregatorSpec::Median => "Median",
            AggregatorSpec::Trimmed { .. } => "Trimmed",
            AggregatorSpec::GeoMed { .. } => "GeoMed",
            AggregatorSpec::FlTrust { .. } => "FLTrust",
            AggregatorSpec::FedCredit { .. } => "Fed-Credit",
        }
    }

    /// Replace unset `f`/`k`/`m` with concrete values for `n` clients of
    /// which `n_malicious` attack.
    pub fn resolve(&self, n: usize, n_malicious: usize) -> Result<AggregatorSpec> {
        let resolved = match *self {
            AggregatorSpec::Krum { f } => AggregatorSpec::Krum {
                f: Some(f.unwrap_or(n_malicious)),
            },
            AggregatorSpec::MultiKrum { f, m } => {
                let f = f.unwrap_or(n_malicious);
                AggregatorSpec::MultiKrum {
                    f: Some(f),
                    m: Some(m.unwrap_or_else(|| n.saturating_sub(f + 2))),
                }
            }
            AggregatorSpec::Trimmed { k } => AggregatorSpec::Trimmed {
                k: Some(k.unwrap_or(n_malicious)),
            },
            other => other,
        };
        resolved.validate(n)?;
        Ok(resolved)
    }

    /// Check call-time preconditions for `n` clients.
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            AggregatorSpec::Krum { f: Some(f) } => check_krum(n, f),
            AggregatorSpec::MultiKrum { f: Some(f), m } => {
                check_krum(n, f)?;
                if let Some(m) = m {
                    check_multi_krum_m(n, f, m)?;
                }
                Ok(())
            }
            AggregatorSpec::Trimmed { k: Some(k) } => check_trim(n, k),
            AggregatorSpec::GeoMed { tol, max_iters } => {
                if !(tol > 0.0) {
                    return Err(Error::config("aggregator.tol", "must be positive"));
                }
                if max_iters == 0 {
                    return Err(Error::config("aggregator.max_iters", "must be positive"));
                }
                Ok(())
            }
            AggregatorSpec::FlTrust { root_size } if root_size == 0 => {
                Err(Error::config("aggregator.root_size", "must be positive"))
            }
            AggregatorSpec::FedCredit { alpha2, beta, alpha1 } => {
                if !(alpha2 > 0.0) {
                    return Err(Error::config("aggregator.alpha2", "must be positive"));
                }
                if !(0.0..=1.0).contains(&beta) {
                    return Err(Error::config("aggregator.beta", "must lie in [0, 1]"));
                }
                if !alpha1.is_finite() {
                    return Err(Error::config("aggregator.alpha1", "must be finite"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

pub(crate) fn check_krum(n: usize, f: usize) -> Result<()> {
    if n < f + 3 {
        return Err(Error::config(
            "aggregator.f",
            format!("Krum needs n - f - 2 >= 1, got n = {n}, f = {f}"),
        ));
    }
    Ok(())
}

pub(crate) fn check_multi_krum_m(n: usize, f: usize, m: usize) -> Result<()> {
    if m == 0 || m > n - f - 2 {
        return Err(Error::config(
            "aggregator.m",
            format!("Multi-Krum needs 1 <= m <= n - f - 2 = {}, got {m}", n - f - 2),
        ));
    }
    Ok(())
}

pub(crate) fn check_trim(n: usize, k: usize) -> Result<()> {
    if 2 * k >= n {
        return Err(Error::config(
            "aggregator.k",
            format!("trimmed mean needs 2k < n, got n = {n}, k = {k}"),
        ));
    }
    Ok(())
}

/// Flatten every set into `f64`, checking they share one structure.
pub(crate) fn flatten_all(locals: &[ParamSet]) -> Result<Vec<Vec<f64>>> {
    check_uniform(locals)?;
    Ok(locals.iter().map(ParamSet::to_flat_f64).collect())
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

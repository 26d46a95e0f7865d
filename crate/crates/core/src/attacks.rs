//! Poisoning behaviours applied at malicious clients.
//!
//! Data attacks (pairwise and symmetric label flipping) rewrite the client's
//! labels once before training starts. Model attacks (constant, normal and
//! sign-flip parameters) replace the upload after local training.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackSpec {
    #[default]
    None,
    /// Every parameter set to `value`.
    ConstantParam {
        #[serde(default = "default_constant")]
        value: f32,
    },
    /// Every parameter drawn from `Normal(mean, std)`.
    NormalParam {
        #[serde(default)]
        mean: f32,
        #[serde(default = "default_std")]
        std: f32,
    },
    /// Negated trained parameters.
    SignFlip,
    /// `y -> (y + 1) mod C` for a `rate` fraction of samples.
    Pairwise {
        #[serde(default = "default_rate")]
        rate: f64,
    },
    /// `y -> ` uniform label other than `y` for a `rate` fraction of samples.
    Symmetric {
        #[serde(default = "default_rate")]
        rate: f64,
    },
}

fn default_constant() -> f32 {
    1.0
}

fn default_std() -> f32 {
    1.0
}

fn default_rate() -> f64 {
    1.0
}

impl AttackSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AttackSpec::NormalParam { std, mean } if !(std >= 0.0) || mean.is_nan() => {
                Err(Error::config("attack.std", format!("must be >= 0, got {std}")))
            }
            AttackSpec::Pairwise { rate } | AttackSpec::Symmetric { rate } if !(0.0..=1.0).contains(&rate) => {
                Err(Error::config("attack.rate", format!("must lie in [0, 1], got {rate}")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_data_attack(&self) -> bool {
        matches!(self, AttackSpec::Pairwise { .. } | AttackSpec::Symmetric { .. })
    }

    pub fn is_model_attack(&self) -> bool {
        matches!(
            self,
            AttackSpec::ConstantParam { .. } | AttackSpec::NormalParam { .. } | AttackSpec::SignFlip
        )
    }

    /// Whether the attacker's upload depends on genuinely trained parameters.
    pub fn needs_training(&self) -> bool {
        !matches!(self, AttackSpec::ConstantParam { .. } | AttackSpec::NormalParam { .. })
    }

    /// Short tag used in run ids and summaries.
    pub fn short_name(&self) -> &'static str {
        match self {
            AttackSpec::None => "none",
            AttackSpec::ConstantParam { .. } => "CP",
            AttackSpec::NormalParam { .. } => "NP",
            AttackSpec::SignFlip => "SF",
            AttackSpec::Pairwise { .. } => "PW",
            AttackSpec::Symmetric { .. } => "SM",
        }
    }
}

/// Flip labels for a label-flipping attack. `AttackSpec::None` passes the
/// labels through; model attacks are rejected.
pub fn poison_labels(labels: &[u32], spec: &AttackSpec, num_classes: usize, seed: u64) -> Result<Vec<u32>> {
    spec.validate()?;
    let c = num_classes as u32;
    if num_classes < 2 {
        return Err(Error::InvalidInput("label flipping needs at least two classes".into()));
    }
    let mut rng = rng_from_seed(seed);
    match *spec {
        AttackSpec::None => Ok(labels.to_vec()),
        AttackSpec::Pairwise { rate } => labels
            .iter()
            .map(|&y| {
                if y >= c {
                    return Err(Error::InvalidInput(format!("label {y} out of range")));
                }
                Ok(if rng.gen_bool(rate) { (y + 1) % c } else { y })
            })
            .collect(),
        AttackSpec::Symmetric { rate } => labels
            .iter()
            .map(|&y| {
                if y >= c {
                    return Err(Error::InvalidInput(format!("label {y} out of range")));
                }
                if rng.gen_bool(rate) {
                    // uniform over the C - 1 labels other than y
                    let k = rng.gen_range(0..c - 1);
                    Ok(if k >= y { k + 1 } else { k })
                } else {
                    Ok(y)
                }
            })
            .collect(),
        other => Err(Error::InvalidInput(format!(
            "{} is a model-poisoning attack, not a label attack",
            other.short_name()
        ))),
    }
}

/// Replace a trained upload for a model-poisoning attack. `AttackSpec::None`
/// passes the model through; label attacks are rejected.
pub fn poison_model(trained: &ParamSet, spec: &AttackSpec, seed: u64) -> Result<ParamSet> {
    spec.validate()?;
    match *spec {
        AttackSpec::None => Ok(trained.clone()),
        AttackSpec::ConstantParam { value } => Ok(trained.map(|_| value)),
        AttackSpec::NormalParam { mean, std } => {
            let normal = Normal::new(mean, std).map_err(|e| Error::config("attack.std", e.to_string()))?;
            let mut rng = rng_from_seed(seed);
            Ok(trained.map(|_| normal.sample(&mut rng)))
        }
        AttackSpec::SignFlip => Ok(trained.map(|v| -v)),
        other => Err(Error::InvalidInput(format!(
            "{} is a label-flipping attack, not a model attack",
            other.short_name()
        ))),
    }
}

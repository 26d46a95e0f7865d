//! Credibility-weighted aggregation.
//!
//! The server keeps one credibility value `τ_i` per client, starting at 1.
//! Each round:
//!
//! 1. An equilibrium factor `α = sigmoid((r + α₁) / α₂)` blends uniform
//!    weights with credibility shares: `w_i = (1 - α)/n + α · τ_i / Στ`.
//! 2. The new global model is `Σ w_i θ_i`.
//! 3. Every client is scored by the mean per-tensor cosine similarity `S_i`
//!    between its upload and the new global model, and its credibility decays
//!    toward the score: `τ_i ← β S_i + (1 - β) τ_i`.
//! 4. The smallest credibility is subtracted from all of them.
//!
//! `r` is the 1-based index of the round being aggregated, so α grows from
//! round to round and credibility gradually takes over from uniform weighting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregators::weighted_combination;
use crate::error::{Error, Result};
use crate::params::{check_uniform, ParamSet};

pub const DEFAULT_ALPHA1: f64 = 1.0;
pub const DEFAULT_ALPHA2: f64 = 0.8;
pub const DEFAULT_BETA: f64 = 0.1;

/// Below this total credibility the credibility shares fall back to uniform.
pub const DEGENERATE_TAU_SUM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibilityState {
    tau: Vec<f64>,
    round: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
}

impl CredibilityState {
    /// Fresh state: every client at credibility 1, no rounds completed.
    pub fn new(n_clients: usize, alpha1: f64, alpha2: f64, beta: f64) -> Result<Self> {
        Self::with_tau(vec![1.0; n_clients], 0, alpha1, alpha2, beta)
    }

    pub fn with_defaults(n_clients: usize) -> Self {
        Self::new(n_clients, DEFAULT_ALPHA1, DEFAULT_ALPHA2, DEFAULT_BETA).expect("defaults are valid")
    }

    /// State with explicit credibility values, e.g. for replaying a run.
    pub fn with_tau(tau: Vec<f64>, round: usize, alpha1: f64, alpha2: f64, beta: f64) -> Result<Self> {
        if tau.is_empty() {
            return Err(Error::InvalidInput("credibility state needs at least one client".into()));
        }
        if tau.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("credibility values must be finite".into()));
        }
        if !(alpha2 > 0.0) || !alpha1.is_finite() || !alpha2.is_finite() {
            return Err(Error::config("aggregator.alpha2", "alpha2 must be positive and finite"));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::config("aggregator.beta", "beta must lie in [0, 1]"));
        }
        Ok(CredibilityState {
            tau,
            round,
            alpha1,
            alpha2,
            beta,
        })
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    /// Completed rounds.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn num_clients(&self) -> usize {
        self.tau.len()
    }
}

/// Aggregation weights, non-negative and summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `1 / (1 + exp(-(round_index + α₁) / α₂))`.
pub fn equilibrium_factor(round_index: f64, alpha1: f64, alpha2: f64) -> f64 {
    1.0 / (1.0 + (-(round_index + alpha1) / alpha2).exp())
}

/// `w_i = (1 - α)/n + α · τ_i / Στ` with α evaluated at `round_index`.
pub fn compute_weights(state: &CredibilityState, round_index: usize) -> WeightVector {
    let n = state.tau.len() as f64;
    let alpha = equilibrium_factor(round_index as f64, state.alpha1, state.alpha2);
    let total: f64 = state.tau.iter().sum();
    let uniform = 1.0 / n;
    WeightVector(
        state
            .tau
            .iter()
            .map(|&t| {
                let share = if total < DEGENERATE_TAU_SUM { uniform } else { t / total };
                // same as (1 - α)/n + α·share, but exactly 1/n when all τ are equal
                uniform + alpha * (share - uniform)
            })
            .collect(),
    )
}

/// Convex combination of the uploaded parameters.
pub fn aggregate(locals: &[ParamSet], weights: &WeightVector) -> Result<ParamSet> {
    weighted_combination(locals, weights.as_slice())
}

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return 0.0;
    }
    let c = ab / (aa.sqrt() * bb.sqrt());
    if c.is_finite() {
        c.clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

/// Mean over tensors (every weight matrix and every bias vector) of the
/// cosine similarity between `local` and `global_new`. A zero tensor on
/// either side contributes 0.
pub fn credibility_score(local: &ParamSet, global_new: &ParamSet) -> Result<f64> {
    local.check_same_structure(global_new)?;
    let n = local.num_tensors();
    if n == 0 {
        return Err(Error::Shape("parameter set has no tensors".into()));
    }
    let sum: f64 = local
        .tensors()
        .iter()
        .zip(global_new.tensors())
        .map(|(a, b)| cosine(&a.values, &b.values))
        .sum();
    Ok(sum / n as f64)
}

/// Subtract the minimum from every entry.
pub fn normalize(tau: &mut [f64]) {
    let min = tau.iter().copied().fold(f64::INFINITY, f64::min);
    if min.is_finite() {
        tau.iter_mut().for_each(|t| *t -= min);
    }
}

/// `τ_i ← β S_i + (1 - β) τ_i` followed by [`normalize`].
pub fn blend(state: &CredibilityState, scores: &[f64]) -> Result<CredibilityState> {
    if scores.len() != state.tau.len() {
        return Err(Error::Shape(format!(
            "{} scores for {} clients",
            scores.len(),
            state.tau.len()
        )));
    }
    let beta = state.beta;
    let mut tau: Vec<f64> = state
        .tau
        .iter()
        .zip(scores)
        .map(|(&t, &s)| beta * s + (1.0 - beta) * t)
        .collect();
    normalize(&mut tau);
    Ok(CredibilityState {
        tau,
        round: state.round + 1,
        ..*state
    })
}

/// Per-client scores against the new global model.
pub fn credibility_scores(local_models: &[ParamSet], global_new: &ParamSet) -> Result<Vec<f64>> {
    local_models
        .par_iter()
        .map(|m| credibility_score(m, global_new))
        .collect()
}

/// Score every client against `global_new`, blend and normalise.
pub fn update_credibility(
    state: &CredibilityState,
    local_models: &[ParamSet],
    global_new: &ParamSet,
) -> Result<CredibilityState> {
    if local_models.len() != state.tau.len() {
        return Err(Error::Shape(format!(
            "{} models for {} credibility values",
            local_models.len(),
            state.tau.len()
        )));
    }
    blend(state, &credibility_scores(local_models, global_new)?)
}

/// Per-round values worth logging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreditRoundLog {
    pub equilibrium: f64,
    pub weights: Vec<f64>,
    pub scores: Vec<f64>,
    /// Credibility after normalisation.
    pub credibility: Vec<f64>,
}

/// One server step: weights from the stored credibility, aggregation, then
/// the credibility update against the freshly aggregated model.
pub fn fedcredit_round(
    global_prev: &ParamSet,
    locals: &[ParamSet],
    state: &CredibilityState,
) -> Result<(ParamSet, CredibilityState, CreditRoundLog)> {
    check_uniform(locals)?;
    global_prev.check_same_structure(&locals[0])?;
    if locals.len() != state.tau.len() {
        return Err(Error::Shape(format!(
            "{} uploads for {} credibility values",
            locals.len(),
            state.tau.len()
        )));
    }
    let round_index = state.round + 1;
    let weights = compute_weights(state, round_index);
    let global_new = aggregate(locals, &weights)?;
    let scores = credibility_scores(locals, &global_new)?;
    let next = blend(state, &scores)?;
    let log = CreditRoundLog {
        equilibrium: equilibrium_factor(round_index as f64, state.alpha1, state.alpha2),
        weights: weights.0,
        scores,
        credibility: next.tau.clone(),
    };
    Ok((global_new, next, log))
}

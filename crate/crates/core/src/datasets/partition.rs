//! Splitting a training pool across clients.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Gamma;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{mix, rng_from_seed};

/// Attempts before a Dirichlet split that violates `min_per_client` is abandoned.
pub const DIRICHLET_MAX_REDRAWS: usize = 100;

/// Sample indices owned by each client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub assignments: Vec<Vec<usize>>,
}

impl PartitionPlan {
    pub fn num_clients(&self) -> usize {
        self.assignments.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.assignments.iter().map(Vec::len).collect()
    }

    /// Disjointness, index range and minimum client size.
    pub fn validate(&self, n_samples: usize, min_per_client: usize) -> Result<()> {
        let mut seen = vec![false; n_samples];
        for (client, idx) in self.assignments.iter().enumerate() {
            if idx.len() < min_per_client {
                return Err(Error::Partition(format!(
                    "client {client} has {} samples, min_per_client is {min_per_client}",
                    idx.len()
                )));
            }
            for &i in idx {
                if i >= n_samples {
                    return Err(Error::Partition(format!("index {i} out of range")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::Partition(format!("index {i} assigned twice")));
                }
            }
        }
        Ok(())
    }
}

fn check_clients(n_clients: usize) -> Result<()> {
    if n_clients == 0 {
        return Err(Error::InvalidInput("need at least one client".into()));
    }
    Ok(())
}

/// Deal each class's shuffled indices round-robin. The dealing position
/// carries over between classes so client totals also stay balanced.
pub fn partition_iid(dataset: &Dataset, n_clients: usize, seed: u64) -> Result<PartitionPlan> {
    check_clients(n_clients)?;
    let mut rng = rng_from_seed(seed);
    let mut assignments = vec![Vec::new(); n_clients];
    let mut next = 0;
    for mut class_idx in dataset.indices_by_class() {
        class_idx.shuffle(&mut rng);
        for i in class_idx {
            assignments[next].push(i);
            next = (next + 1) % n_clients;
        }
    }
    Ok(PartitionPlan { assignments })
}

fn dirichlet_shares(rng: &mut impl Rng, n: usize, concentration: f64) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("concentration validated");
    let mut shares: Vec<f64> = (0..n).map(|_| rng.sample(gamma)).collect();
    let total: f64 = shares.iter().sum();
    if total > 0.0 && total.is_finite() {
        shares.iter_mut().for_each(|s| *s /= total);
    } else {
        // every draw underflowed: the whole class goes to one client
        shares.iter_mut().for_each(|s| *s = 0.0);
        shares[rng.gen_range(0..n)] = 1.0;
    }
    shares
}

/// Label-skewed split: for every class, client shares are drawn from a
/// symmetric Dirichlet with the given concentration. Plans leaving a client
/// below `min_per_client` are redrawn, up to [`DIRICHLET_MAX_REDRAWS`] times.
pub fn partition_dirichlet(
    dataset: &Dataset,
    n_clients: usize,
    concentration: f64,
    min_per_client: usize,
    seed: u64,
) -> Result<PartitionPlan> {
    check_clients(n_clients)?;
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::config(
            "partition.concentration",
            format!("must be a positive finite number, got {concentration}"),
        ));
    }
    let by_class = dataset.indices_by_class();
    for attempt in 0..DIRICHLET_MAX_REDRAWS {
        let mut rng = rng_from_seed(mix(&[seed, attempt as u64]));
        let mut assignments = vec![Vec::new(); n_clients];
        for class_idx in &by_class {
            let mut idx = class_idx.clone();
            idx.shuffle(&mut rng);
            let shares = dirichlet_shares(&mut rng, n_clients, concentration);
            let total = idx.len() as f64;
            let mut cum = 0.0;
            let mut start = 0;
            for (client, share) in shares.iter().enumerate() {
                cum += share;
                let end = if client + 1 == n_clients {
                    idx.len()
                } else {
                    ((cum * total).round() as usize).clamp(start, idx.len())
                };
                assignments[client].extend_from_slice(&idx[start..end]);
                start = end;
            }
        }
        if assignments.iter().all(|a| a.len() >= min_per_client) {
            return Ok(PartitionPlan { assignments });
        }
    }
    Err(Error::Partition(format!(
        "no Dirichlet({concentration}) split of {} samples over {n_clients} clients gave every \
         client at least min_per_client = {min_per_client} samples after {DIRICHLET_MAX_REDRAWS} draws",
        dataset.len()
    )))
}

//! Experiment orchestration: data preparation, communication rounds and
//! per-round metrics.

use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregators::{self, AggregatorSpec};
use crate::attacks::{poison_labels, poison_model, AttackSpec};
use crate::credibility::{fedcredit_round, CredibilityState};
use crate::datasets::{self, Dataset, PartitionPlan};
use crate::error::{Error, Result};
use crate::nn::{self, MlpArchitecture, TrainConfig};
use crate::params::ParamSet;
use crate::rng::{derive_rng, derive_seed, Role};

/// Where training and test data come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Gaussian blobs; see [`datasets::synth_blobs`].
    Synth {
        #[serde(default = "default_synth_train")]
        n_train: usize,
        #[serde(default = "default_synth_test")]
        n_test: usize,
        #[serde(default = "default_synth_classes")]
        num_classes: usize,
        #[serde(default = "default_synth_dim")]
        dim: usize,
        #[serde(default = "default_synth_separation")]
        separation: f64,
    },
    /// IDX image/label files, optionally truncated to their first samples.
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        #[serde(default)]
        train_limit: Option<usize>,
        #[serde(default)]
        test_limit: Option<usize>,
    },
}

fn default_synth_train() -> usize {
    1000
}
fn default_synth_test() -> usize {
    500
}
fn default_synth_classes() -> usize {
    4
}
fn default_synth_dim() -> usize {
    8
}
fn default_synth_separation() -> f64 {
    3.0
}

impl DatasetSource {
    pub fn synth() -> Self {
        DatasetSource::Synth {
            n_train: default_synth_train(),
            n_test: default_synth_test(),
            num_classes: default_synth_classes(),
            dim: default_synth_dim(),
            separation: default_synth_separation(),
        }
    }

    pub fn short_name(&self) -> String {
        match self {
            DatasetSource::Synth { .. } => "synth".into(),
            DatasetSource::Idx { train_images, .. } => {
                let parent = train_images.parent().and_then(|p| p.file_name());
                parent.map_or_else(|| "idx".into(), |p| p.to_string_lossy().into_owned())
            }
        }
    }

    /// Load `(train, test)`, both reporting the same class count.
    pub fn load(&self, seed: u64) -> Result<(Dataset, Dataset)> {
        match self {
            &DatasetSource::Synth {
                n_train,
                n_test,
                num_classes,
                dim,
                separation,
            } => {
                if n_train == 0 || n_test == 0 {
                    return Err(Error::config("dataset.n_train", "synthetic sizes must be positive"));
                }
                Ok((
                    datasets::synth_blobs(
                        n_train,
                        num_classes,
                        dim,
                        separation,
                        derive_seed(seed, Role::SynthTrain, 0, 0, 0),
                    )?,
                    datasets::synth_blobs(
                        n_test,
                        num_classes,
                        dim,
                        separation,
                        derive_seed(seed, Role::SynthTest, 0, 0, 0),
                    )?,
                ))
            }
            DatasetSource::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                train_limit,
                test_limit,
            } => {
                let mut train = datasets::load_idx(train_images, train_labels)?;
                let mut test = datasets::load_idx(test_images, test_labels)?;
                if let Some(n) = *train_limit {
                    train = train.take(n)?;
                }
                if let Some(n) = *test_limit {
                    test = test.take(n)?;
                }
                if train.dim() != test.dim() {
                    return Err(Error::Shape(format!(
                        "train images have {} pixels, test images {}",
                        train.dim(),
                        test.dim()
                    )));
                }
                let classes = train.num_classes().max(test.num_classes());
                Ok((train.with_num_classes(classes)?, test.with_num_classes(classes)?))
            }
        }
    }
}

/// How the training pool is split across clients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionSpec {
    #[default]
    Iid,
    /// Label-skewed split. `concentration` is the symmetric Dirichlet
    /// parameter (unrelated to the equilibrium factor α); unset
    /// `min_per_client` means twice the batch size.
    Dirichlet {
        #[serde(default = "default_concentration")]
        concentration: f64,
        #[serde(default)]
        min_per_client: Option<usize>,
    },
}

pub const DEFAULT_DIRICHLET_CONCENTRATION: f64 = 0.5;

fn default_concentration() -> f64 {
    DEFAULT_DIRICHLET_CONCENTRATION
}

impl PartitionSpec {
    pub fn short_name(&self) -> &'static str {
        match self {
            PartitionSpec::Iid => "iid",
            PartitionSpec::Dirichlet { .. } => "noniid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_hidden")]
    pub hidden: [usize; 2],
}

fn default_hidden() -> [usize; 2] {
    [128, 64]
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: default_hidden(),
        }
    }
}

/// One fully specified experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_clients")]
    pub n_clients: usize,
    /// Number of attackers. Ignored when `malicious_ids` is given.
    #[serde(default)]
    pub num_malicious: usize,
    /// Explicit attacker ids; unset means the highest-indexed `num_malicious` clients.
    #[serde(default)]
    pub malicious_ids: Option<Vec<usize>>,
    #[serde(default)]
    pub attack: AttackSpec,
    pub aggregator: AggregatorSpec,
    #[serde(default)]
    pub partition: PartitionSpec,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Evaluate on a fixed random subset of the test set.
    #[serde(default)]
    pub eval_subset_size: Option<usize>,
    /// Permit attackers to be half or more of the clients.
    #[serde(default)]
    pub allow_majority_malicious: bool,
}

fn default_clients() -> usize {
    10
}
fn default_rounds() -> usize {
    100
}

impl ExperimentConfig {
    /// Defaults everywhere except the data source and the rule.
    pub fn new(dataset: DatasetSource, aggregator: AggregatorSpec) -> Self {
        ExperimentConfig {
            dataset,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            n_clients: default_clients(),
            num_malicious: 0,
            malicious_ids: None,
            attack: AttackSpec::None,
            aggregator,
            partition: PartitionSpec::Iid,
            rounds: default_rounds(),
            master_seed: 0,
            eval_subset_size: None,
            allow_majority_malicious: false,
        }
    }

    pub fn attacker_ids(&self) -> Vec<usize> {
        match &self.malicious_ids {
            Some(ids) => ids.clone(),
            None => (self.n_clients.saturating_sub(self.num_malicious)..self.n_clients).collect(),
        }
    }

    /// Validate and make every implicit default explicit.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut out = self.clone();
        if out.n_clients == 0 {
            return Err(Error::config("n_clients", "must be positive"));
        }
        if out.rounds == 0 {
            return Err(Error::config("rounds", "must be positive"));
        }
        out.train.validate()?;
        out.attack.validate()?;
        let mut ids = out.attacker_ids();
        if let Some(explicit) = &out.malicious_ids {
            if out.num_malicious != 0 && out.num_malicious != explicit.len() {
                return Err(Error::config(
                    "malicious_ids",
                    format!("lists {} ids but num_malicious is {}", explicit.len(), out.num_malicious),
                ));
            }
        }
        if self.num_malicious > self.n_clients {
            return Err(Error::config("num_malicious", "exceeds n_clients"));
        }
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("malicious_ids", "ids must be distinct"));
        }
        if let Some(&bad) = ids.iter().find(|&&i| i >= out.n_clients) {
            return Err(Error::config("malicious_ids", format!("id {bad} out of range")));
        }
        if 2 * ids.len() >= out.n_clients && !ids.is_empty() && !out.allow_majority_malicious {
            return Err(Error::config(
                "malicious_ids",
                format!(
                    "{} attackers among {} clients: attackers must be fewer than half \
                     (set allow_majority_malicious = true for stress tests)",
                    ids.len(),
                    out.n_clients
                ),
            ));
        }
        out.num_malicious = ids.len();
        out.malicious_ids = Some(ids);
        out.aggregator = out.aggregator.resolve(out.n_clients, out.num_malicious)?;
        if let PartitionSpec::Dirichlet {
            concentration,
            min_per_client,
        } = out.partition
        {
            if !(concentration > 0.0 && concentration.is_finite()) {
                return Err(Error::config("partition.concentration", "must be positive"));
            }
            out.partition = PartitionSpec::Dirichlet {
                concentration,
                min_per_client: Some(min_per_client.unwrap_or(2 * out.train.batch_size)),
            };
        }
        if out.eval_subset_size == Some(0) {
            return Err(Error::config("eval_subset_size", "must be positive"));
        }
        if let DatasetSource::Synth { num_classes, dim, .. } = out.dataset {
            if num_classes < 2 || dim == 0 {
                return Err(Error::config("dataset", "synthetic data needs >= 2 classes and dim >= 1"));
            }
        }
        Ok(out)
    }

    /// Short id, e.g. `synth-iid-SF-f3-Fed-Credit-s0`.
    pub fn label(&self) -> String {
        format!(
            "{}-{}-{}-f{}-{}-s{}",
            self.dataset.short_name(),
            self.partition.short_name(),
            self.attack.short_name(),
            self.attacker_ids().len(),
            self.aggregator.name(),
            self.master_seed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub test_accuracy: f64,
    pub test_loss: f64,
    /// Post-normalisation credibility (credibility-weighted runs only).
    pub per_client_credibility: Option<Vec<f64>>,
    pub per_client_weight: Option<Vec<f64>>,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub records: Vec<RoundRecord>,
    pub final_accuracy: f64,
    pub best_accuracy: f64,
}

/// Argmax accuracy (ties to the lowest class) and mean cross-entropy.
pub fn evaluate(params: &ParamSet, test: &Dataset) -> Result<(f64, f64)> {
    const CHUNK: usize = 2048;
    let features = test.features();
    let mut correct = 0;
    let mut loss = 0.0;
    for start in (0..test.len()).step_by(CHUNK) {
        let end = (start + CHUNK).min(test.len());
        let (c, l) = nn::score_batch(
            params,
            features.slice(ndarray::s![start..end, ..]),
            &test.labels()[start..end],
        )?;
        correct += c;
        loss += l;
    }
    Ok((correct as f64 / test.len() as f64, loss / test.len() as f64))
}

/// Aggregator-specific server memory carried between rounds.
#[derive(Debug, Clone, PartialEq)]
pub enum ServerState {
    Stateless,
    Credibility(CredibilityState),
}

/// Data and roles after partitioning and label poisoning.
#[derive(Debug, Clone)]
pub struct Clients {
    pub data: Vec<Dataset>,
    pub malicious: Vec<bool>,
    pub plan: PartitionPlan,
    /// Server-held clean samples (FLTrust only).
    pub root: Option<Dataset>,
}

impl Clients {
    pub fn sizes(&self) -> Vec<usize> {
        self.data.iter().map(Dataset::len).collect()
    }
}

/// A prepared experiment that can be stepped round by round.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub config: ExperimentConfig,
    pub arch: MlpArchitecture,
    pub clients: Clients,
    pub test: Dataset,
    pub global: ParamSet,
    pub state: ServerState,
    pub round: usize,
}

impl Simulation {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        let config = config.resolve()?;
        let seed = config.master_seed;
        let (train, test) = config.dataset.load(seed)?;
        let arch = MlpArchitecture::new(train.dim(), config.model.hidden, train.num_classes())?;

        let mut pool: Vec<usize> = (0..train.len()).collect();
        let root = if let AggregatorSpec::FlTrust { root_size } = config.aggregator {
            if root_size >= train.len() {
                return Err(Error::config("aggregator.root_size", "root set would consume the whole training pool"));
            }
            pool.shuffle(&mut derive_rng(seed, Role::RootSample, 0, 0, 0));
            let root_idx: Vec<usize> = pool.drain(..root_size).collect();
            pool.sort_unstable();
            Some(train.subset(&root_idx)?)
        } else {
            None
        };
        let pool_data = train.subset(&pool)?;

        let partition_seed = derive_seed(seed, Role::Partition, 0, 0, 0);
        let plan = match config.partition {
            PartitionSpec::Iid => datasets::partition_iid(&pool_data, config.n_clients, partition_seed)?,
            PartitionSpec::Dirichlet {
                concentration,
                min_per_client,
            } => datasets::partition_dirichlet(
                &pool_data,
                config.n_clients,
                concentration,
                min_per_client.unwrap_or(0),
                partition_seed,
            )?,
        };
        let min_per_client = match config.partition {
            PartitionSpec::Dirichlet { min_per_client, .. } => min_per_client.unwrap_or(0),
            PartitionSpec::Iid => 1,
        };
        plan.validate(pool_data.len(), min_per_client)?;

        let attackers = config.attacker_ids();
        let mut malicious = vec![false; config.n_clients];
        for &i in &attackers {
            malicious[i] = true;
        }
        let data = plan
            .assignments
            .iter()
            .enumerate()
            .map(|(client, idx)| {
                let local = pool_data.subset(idx)?;
                if malicious[client] && config.attack.is_data_attack() {
                    let seed = derive_seed(seed, Role::LabelPoison, client as u64, 0, 0);
                    let flipped = poison_labels(local.labels(), &config.attack, local.num_classes(), seed)?;
                    local.with_labels(flipped)
                } else {
                    Ok(local)
                }
            })
            .collect::<Result<Vec<_>>>()?;

        let test = match config.eval_subset_size {
            Some(k) if k < test.len() => {
                let mut idx: Vec<usize> = (0..test.len()).collect();
                idx.shuffle(&mut derive_rng(seed, Role::EvalSubset, 0, 0, 0));
                idx.truncate(k);
                idx.sort_unstable();
                test.subset(&idx)?
            }
            _ => test,
        };

        let global = nn::init_params(&arch, derive_seed(seed, Role::Init, 0, 0, 0));
        let state = match config.aggregator {
            AggregatorSpec::FedCredit { alpha1, alpha2, beta } => {
                ServerState::Credibility(CredibilityState::new(config.n_clients, alpha1, alpha2, beta)?)
            }
            _ => ServerState::Stateless,
        };
        Ok(Simulation {
            config,
            arch,
            clients: Clients {
                data,
                malicious,
                plan,
                root,
            },
            test,
            global,
            state,
            round: 0,
        })
    }

    /// Every client's upload for `round` starting from `global`.
    pub fn client_uploads(&self, round: usize) -> Result<Vec<ParamSet>> {
        let cfg = &self.config;
        (0..cfg.n_clients)
            .into_par_iter()
            .map(|client| {
                let attack = if self.clients.malicious[client] {
                    cfg.attack
                } else {
                    AttackSpec::None
                };
                let trained = if attack.needs_training() {
                    let seed = derive_seed(cfg.master_seed, Role::Train, client as u64, round as u64, 0);
                    nn::local_train(&self.global, &self.clients.data[client], &cfg.train, seed)?
                } else {
                    self.global.clone()
                };
                if attack.is_model_attack() {
                    let seed = derive_seed(cfg.master_seed, Role::ModelPoison, client as u64, round as u64, 0);
                    poison_model(&trained, &attack, seed)
                } else {
                    Ok(trained)
                }
            })
            .collect()
    }

    /// Combine uploads with the configured rule. Returns the new global model,
    /// the new server state and (for credibility weighting) the logged
    /// credibility and weights.
    pub fn aggregate(
        &self,
        round: usize,
        uploads: &[ParamSet],
    ) -> Result<(ParamSet, ServerState, Option<(Vec<f64>, Vec<f64>)>)> {
        let cfg = &self.config;
        let stateless = |p: ParamSet| Ok((p, ServerState::Stateless, None));
        match (cfg.aggregator, &self.state) {
            (AggregatorSpec::FedAvg, _) => stateless(aggregators::fedavg(uploads, &self.clients.sizes())?),
            (AggregatorSpec::Krum { f }, _) => stateless(aggregators::krum(uploads, f.unwrap_or(0))?),
            (AggregatorSpec::MultiKrum { f, m }, _) => {
                let f = f.unwrap_or(0);
                stateless(aggregators::multi_krum(uploads, f, m.unwrap_or(uploads.len() - f - 2))?)
            }
            (AggregatorSpec::Median, _) => stateless(aggregators::coordinate_median(uploads)?),
            (AggregatorSpec::Trimmed { k }, _) => stateless(aggregators::trimmed_mean(uploads, k.unwrap_or(0))?),
            (AggregatorSpec::GeoMed { tol, max_iters }, _) => {
                stateless(aggregators::geometric_median(uploads, tol, max_iters)?)
            }
            (AggregatorSpec::FlTrust { .. }, _) => {
                let root = self.clients.root.as_ref().expect("root set prepared for FLTrust");
                let seed = derive_seed(cfg.master_seed, Role::ServerTrain, 0, round as u64, 0);
                let server_model = nn::local_train(&self.global, root, &cfg.train, seed)?;
                let mut server_update = server_model;
                server_update.axpy(-1.0, &self.global)?;
                stateless(aggregators::fltrust(uploads, &self.global, &server_update)?)
            }
            (AggregatorSpec::FedCredit { .. }, ServerState::Credibility(state)) => {
                let (global, next, log) = fedcredit_round(&self.global, uploads, state)?;
                Ok((global, ServerState::Credibility(next), Some((log.credibility, log.weights))))
            }
            (AggregatorSpec::FedCredit { .. }, ServerState::Stateless) => {
                Err(Error::InvalidInput("credibility aggregation without credibility state".into()))
            }
        }
    }

    /// Broadcast, local training and poisoning, aggregation, evaluation.
    pub fn run_round(&mut self) -> Result<RoundRecord> {
        let started = Instant::now();
        let round = self.round + 1;
        let uploads = self.client_uploads(round)?;
        let (global, state, credit) = self.aggregate(round, &uploads)?;
        if !global.all_finite() {
            return Err(Error::NonFinite {
                round,
                aggregator: self.config.aggregator.name().into(),
            });
        }
        let (test_accuracy, test_loss) = evaluate(&global, &self.test)?;
        self.global = global;
        self.state = state;
        self.round = round;
        let (per_client_credibility, per_client_weight) = match credit {
            Some((c, w)) => (Some(c), Some(w)),
            None => (None, None),
        };
        Ok(RoundRecord {
            round,
            test_accuracy,
            test_loss,
            per_client_credibility,
            per_client_weight,
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        })
    }

    pub fn run(mut self) -> Result<RunResult> {
        let mut records = Vec::with_capacity(self.config.rounds);
        for _ in 0..self.config.rounds {
            records.push(self.run_round()?);
        }
        let final_accuracy = records.last().map_or(0.0, |r| r.test_accuracy);
        let best_accuracy = records.iter().map(|r| r.test_accuracy).fold(0.0, f64::max);
        Ok(RunResult {
            config: self.config,
            records,
            final_accuracy,
            best_accuracy,
        })
    }
}

/// Prepare and run every round of `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunResult> {
    Simulation::new(config)?.run()
}

//! Deterministic federated-learning simulator with credibility-weighted
//! aggregation, robust baseline rules and poisoning attacks.
//!
//! The crate is organised as a pipeline:
//!
//! * [`datasets`] loads IDX files or generates Gaussian blobs and splits the
//!   training pool across clients.
//! * [`nn`] is a small two-hidden-layer MLP trained by minibatch SGD.
//! * [`attacks`] poisons labels before training or replaces uploads after it.
//! * [`aggregators`] holds the baseline rules and [`credibility`] the
//!   credibility-weighted rule.
//! * [`simulator`] runs communication rounds; [`config`] and [`report`] turn
//!   TOML sweeps into CSV and JSON artifacts.
//!
//! ```
//! use fedcredit::aggregators::AggregatorSpec;
//! use fedcredit::simulator::{run_experiment, DatasetSource, ExperimentConfig};
//!
//! let mut cfg = ExperimentConfig::new(DatasetSource::synth(), AggregatorSpec::fed_credit());
//! cfg.rounds = 2;
//! cfg.n_clients = 4;
//! cfg.model.hidden = [8, 8];
//! cfg.train.local_epochs = 1;
//! let result = run_experiment(&cfg).unwrap();
//! assert_eq!(result.records.len(), 2);
//! ```

pub mod aggregators;
pub mod attacks;
pub mod config;
pub mod credibility;
pub mod datasets;
pub mod error;
pub mod nn;
pub mod params;
pub mod report;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
pub use params::{ParamSet, Tensor};

//! Ten clients on Gaussian blobs, one of them uploading sign-flipped models,
//! aggregated with credibility weighting.
//!
//! ```text
//! cargo run --example quickstart
//! ```

use fedcredit::aggregators::AggregatorSpec;
use fedcredit::attacks::AttackSpec;
use fedcredit::simulator::{DatasetSource, ExperimentConfig, Simulation};

fn main() -> fedcredit::Result<()> {
    let mut cfg = ExperimentConfig::new(DatasetSource::synth(), AggregatorSpec::fed_credit());
    cfg.rounds = 15;
    cfg.num_malicious = 1;
    cfg.attack = AttackSpec::SignFlip;

    let mut sim = Simulation::new(&cfg)?;
    println!("round  accuracy  loss    attacker weight");
    for _ in 0..cfg.rounds {
        let r = sim.run_round()?;
        let w = r.per_client_weight.as_ref().expect("credibility run");
        println!("{:>5}  {:>8.4}  {:.4}  {:.4}", r.round, r.test_accuracy, r.test_loss, w[9]);
    }
    Ok(())
}

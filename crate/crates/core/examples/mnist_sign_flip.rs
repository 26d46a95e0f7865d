//! Three of ten clients upload sign-flipped models on the MNIST subset.
//! Plain averaging collapses; credibility weighting recovers.

use std::path::Path;

use fedcredit::aggregators::AggregatorSpec;
use fedcredit::attacks::AttackSpec;
use fedcredit::config::load_config;
use fedcredit::simulator::run_experiment;

fn main() -> fedcredit::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/mnist-signflip.toml");
    let mut base = load_config(path)?.base;
    base.train.learning_rate = 0.05;

    for (attack, f) in [(AttackSpec::None, 0), (AttackSpec::SignFlip, 3)] {
        for aggregator in [AggregatorSpec::FedAvg, AggregatorSpec::fed_credit()] {
            let mut cfg = base.clone();
            cfg.attack = attack;
            cfg.num_malicious = f;
            cfg.aggregator = aggregator;
            let r = run_experiment(&cfg)?;
            println!(
                "{:<5} f={f}  {:<10}  final {:.4}  best {:.4}",
                attack.short_name(),
                aggregator.name(),
                r.final_accuracy,
                r.best_accuracy
            );
        }
    }
    Ok(())
}

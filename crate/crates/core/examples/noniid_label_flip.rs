//! Label-skewed clients, four of them training on flipped labels.

use fedcredit::aggregators::AggregatorSpec;
use fedcredit::attacks::AttackSpec;
use fedcredit::simulator::{run_experiment, DatasetSource, ExperimentConfig, PartitionSpec};

fn main() -> fedcredit::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mnist-subset");
    let source = DatasetSource::Idx {
        train_images: dir.join("train-images-idx3-ubyte.gz"),
        train_labels: dir.join("train-labels-idx1-ubyte.gz"),
        test_images: dir.join("t10k-images-idx3-ubyte.gz"),
        test_labels: dir.join("t10k-labels-idx1-ubyte.gz"),
        train_limit: Some(2000),
        test_limit: None,
    };
    for attack in [AttackSpec::Pairwise { rate: 1.0 }, AttackSpec::Symmetric { rate: 1.0 }] {
        for aggregator in [AggregatorSpec::FedAvg, AggregatorSpec::Median, AggregatorSpec::fed_credit()] {
            let mut cfg = ExperimentConfig::new(source.clone(), aggregator);
            cfg.rounds = 30;
            cfg.train.learning_rate = 0.05;
            cfg.partition = PartitionSpec::Dirichlet {
                concentration: 0.5,
                min_per_client: None,
            };
            cfg.num_malicious = 4;
            cfg.attack = attack;
            let r = run_experiment(&cfg)?;
            println!("{} {:<10} final {:.4}", attack.short_name(), aggregator.name(), r.final_accuracy);
        }
    }
    Ok(())
}

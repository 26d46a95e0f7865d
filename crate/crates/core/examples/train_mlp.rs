//! Centralised training of the MLP on the bundled MNIST subset, to show the
//! model and trainer on their own.

use fedcredit::datasets::load_idx;
use fedcredit::nn::{init_params, local_train, MlpArchitecture, TrainConfig};
use fedcredit::simulator::evaluate;

fn main() -> fedcredit::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/mnist-subset");
    let train = load_idx(format!("{dir}/train-images-idx3-ubyte.gz"), format!("{dir}/train-labels-idx1-ubyte.gz"))?;
    let test = load_idx(format!("{dir}/t10k-images-idx3-ubyte.gz"), format!("{dir}/t10k-labels-idx1-ubyte.gz"))?;

    let arch = MlpArchitecture::new(train.dim(), [128, 64], train.num_classes())?;
    let mut params = init_params(&arch, 0);
    let cfg = TrainConfig {
        learning_rate: 0.05,
        batch_size: 64,
        local_epochs: 1,
    };
    for epoch in 1..=5 {
        params = local_train(&params, &train, &cfg, epoch)?;
        let (acc, loss) = evaluate(&params, &test)?;
        println!("epoch {epoch}: test accuracy {acc:.4}, loss {loss:.4}");
    }
    Ok(())
}

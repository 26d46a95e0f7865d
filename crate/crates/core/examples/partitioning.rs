//! Per-client class histograms for IID and Dirichlet splits of MNIST.
//!
//! ```text
//! cargo run --example partitioning -- 0.1
//! ```

use fedcredit::datasets::{load_idx, partition_dirichlet, partition_iid, Dataset, PartitionPlan};

fn show(title: &str, data: &Dataset, plan: &PartitionPlan) {
    println!("{title}");
    for (client, idx) in plan.assignments.iter().enumerate() {
        let mut counts = vec![0usize; data.num_classes()];
        for &i in idx {
            counts[data.labels()[i] as usize] += 1;
        }
        let cells: Vec<String> = counts.iter().map(|c| format!("{c:>4}")).collect();
        println!("  client {client}: {} | {:>5}", cells.join(""), idx.len());
    }
}

fn main() -> fedcredit::Result<()> {
    let concentration: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.5);
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/mnist-subset");
    let data = load_idx(format!("{dir}/train-images-idx3-ubyte.gz"), format!("{dir}/train-labels-idx1-ubyte.gz"))?;

    show("iid", &data, &partition_iid(&data, 10, 0)?);
    let plan = partition_dirichlet(&data, 10, concentration, 128, 0)?;
    show(&format!("dirichlet({concentration})"), &data, &plan);
    Ok(())
}

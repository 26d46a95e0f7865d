//! What each attack does to labels or to an uploaded model.

use fedcredit::attacks::{poison_labels, poison_model, AttackSpec};
use fedcredit::nn::{init_params, MlpArchitecture};

fn main() -> fedcredit::Result<()> {
    let labels: Vec<u32> = (0..10).collect();
    for spec in [AttackSpec::Pairwise { rate: 1.0 }, AttackSpec::Symmetric { rate: 1.0 }, AttackSpec::Symmetric { rate: 0.3 }] {
        println!("{:<28} {:?}", format!("{spec:?}"), poison_labels(&labels, &spec, 10, 7)?);
    }

    let model = init_params(&MlpArchitecture::new(4, [3, 3], 2)?, 0);
    let head: Vec<f32> = model.values().take(4).collect();
    println!("\n{:<28} {head:.3?}", "trained");
    for spec in [
        AttackSpec::ConstantParam { value: 1.0 },
        AttackSpec::NormalParam { mean: 0.0, std: 1.0 },
        AttackSpec::SignFlip,
    ] {
        let head: Vec<f32> = poison_model(&model, &spec, 7)?.values().take(4).collect();
        println!("{:<28} {head:.3?}", format!("{spec:?}"));
    }
    Ok(())
}

//! Credibility of benign clients and attackers over the rounds of one run.
//! The attack kind and attacker count are optional arguments.
//!
//! ```text
//! cargo run --example credibility_trend -- sign_flip 3
//! cargo run --example credibility_trend -- normal_param 1
//! ```

use fedcredit::aggregators::AggregatorSpec;
use fedcredit::attacks::AttackSpec;
use fedcredit::simulator::{run_experiment, DatasetSource, ExperimentConfig};

fn main() -> fedcredit::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind = args.next().unwrap_or_else(|| "sign_flip".into());
    let f: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(3);
    let attack: AttackSpec = toml::from_str(&format!("kind = \"{kind}\"")).expect("known attack kind");

    let mut cfg = ExperimentConfig::new(DatasetSource::synth(), AggregatorSpec::fed_credit());
    cfg.rounds = 20;
    cfg.num_malicious = f;
    cfg.attack = attack;
    let result = run_experiment(&cfg)?;

    let n = cfg.n_clients;
    println!("{} attackers ({}) among {n} clients", f, attack.short_name());
    println!("round  benign min  benign max  attacker max  attacker weight");
    for r in &result.records {
        let tau = r.per_client_credibility.as_ref().expect("credibility run");
        let w = r.per_client_weight.as_ref().expect("credibility run");
        let (benign, bad) = tau.split_at(n - f);
        let fold = |v: &[f64], init: f64, op: fn(f64, f64) -> f64| v.iter().copied().fold(init, op);
        println!(
            "{:>5}  {:>10.4}  {:>10.4}  {:>12.4}  {:>15.4}",
            r.round,
            fold(benign, f64::INFINITY, f64::min),
            fold(benign, f64::NEG_INFINITY, f64::max),
            fold(bad, f64::NEG_INFINITY, f64::max),
            w[n - f..].iter().sum::<f64>(),
        );
    }
    println!("final accuracy {:.4}", result.final_accuracy);
    Ok(())
}

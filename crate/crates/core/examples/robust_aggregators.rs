//! Every aggregation rule on a toy problem: seven honest clients near 1.0 and
//! three attackers uploading the sign-flipped model at -1.0.

use fedcredit::aggregators;
use fedcredit::credibility::{fedcredit_round, CredibilityState};
use fedcredit::{ParamSet, Tensor};

fn upload(value: f32, jitter: f32) -> ParamSet {
    let values = vec![value + jitter, value - jitter, value];
    ParamSet::new(vec![Tensor::new("w", vec![3], values).unwrap()]).unwrap()
}

fn main() -> fedcredit::Result<()> {
    let mut locals: Vec<ParamSet> = (0..7).map(|i| upload(1.0, 0.01 * i as f32)).collect();
    locals.extend((0..3).map(|_| upload(-1.0, 0.0)));
    let prev = upload(0.9, 0.0);
    let f = 3;

    // FLTrust compares against the server's own update from its clean data
    let mut server_update = upload(1.0, 0.0);
    server_update.axpy(-1.0, &prev)?;

    let mut state = CredibilityState::with_defaults(locals.len());
    let mut credit = prev.clone();
    for _ in 0..3 {
        let (g, next, _) = fedcredit_round(&prev, &locals, &state)?;
        credit = g;
        state = next;
    }

    let results = [
        ("FedAvg", aggregators::fedavg(&locals, &[1; 10])?),
        ("Krum", aggregators::krum(&locals, f)?),
        ("Multi-Krum", aggregators::multi_krum(&locals, f, locals.len() - f - 2)?),
        ("Median", aggregators::coordinate_median(&locals)?),
        ("Trimmed", aggregators::trimmed_mean(&locals, f)?),
        ("GeoMed", aggregators::geometric_median(&locals, 1e-6, 100)?),
        ("FLTrust", aggregators::fltrust(&locals, &prev, &server_update)?),
        ("Fed-Credit (round 3)", credit),
    ];
    for (name, out) in results {
        let v: Vec<f32> = out.values().collect();
        let status = if (v[2] - 1.0).abs() < 0.5 { "robust" } else { "corrupted" };
        println!("{name:<22} {:>8.3} {:>8.3} {:>8.3}  {status}", v[0], v[1], v[2]);
    }
    Ok(())
}

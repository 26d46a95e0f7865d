//! Library-side equivalent of `fedcredit matrix`: expand a config's sweep and
//! write metrics, credibility, manifests and the summary table.
//!
//! ```text
//! cargo run --example run_matrix -- /tmp/fedcredit-out
//! ```

use std::path::{Path, PathBuf};

use fedcredit::config::{load_config_with, Overrides};
use fedcredit::report::run_matrix;

fn main() -> fedcredit::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("fedcredit-matrix"));
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/quickstart.toml");
    let overrides = Overrides {
        pairs: vec![
            r#"sweep.aggregator=[{kind="fedavg"},{kind="median"},{kind="fedcredit"}]"#.into(),
            "sweep.num_malicious=[1,3]".into(),
        ],
        seed: None,
    };
    let configs = load_config_with(config, &overrides)?.expand()?;
    let outcome = run_matrix(&configs, &out, 0)?;
    print!("{}", std::fs::read_to_string(&outcome.summary_path).expect("summary written"));
    println!("artifacts in {}", out.display());
    Ok(())
}

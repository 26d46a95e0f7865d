//! Deterministic result files.
//!
//! For every run `runs/<id>/` receives:
//!
//! * `metrics.csv`: `round,accuracy,loss`, followed by `cred_0..cred_{n-1}`
//!   and `weight_0..weight_{n-1}` for credibility-weighted runs.
//! * `credibility.csv`: `round,cred_0..cred_{n-1}`, credibility-weighted runs only.
//! * `manifest.json`: resolved config, seed, crate version, accuracies and
//!   wall-clock timings.
//!
//! The output directory also gets `summary.csv` with columns
//! `dataset,distribution,attack,f,aggregator,seed,final,best,status,diagnostic`.
//! Wall-clock times only appear in manifests, so CSVs from identical configs
//! are byte-identical.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::simulator::{run_experiment, ExperimentConfig, RunResult};

pub const SUMMARY_HEADER: [&str; 10] = [
    "dataset",
    "distribution",
    "attack",
    "f",
    "aggregator",
    "seed",
    "final",
    "best",
    "status",
    "diagnostic",
];

/// `%.9g`: nine significant digits, trailing zeros dropped, exponent form
/// outside `[1e-5, 1e9)`.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).expect("writing to memory");
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 fields")
}

pub fn metrics_header(n_clients: usize, credibility: bool) -> Vec<String> {
    let mut h: Vec<String> = vec!["round".into(), "accuracy".into(), "loss".into()];
    if credibility {
        h.extend((0..n_clients).map(|i| format!("cred_{i}")));
        h.extend((0..n_clients).map(|i| format!("weight_{i}")));
    }
    h
}

fn is_credibility_run(result: &RunResult) -> bool {
    result
        .records
        .first()
        .is_some_and(|r| r.per_client_credibility.is_some())
}

pub fn metrics_csv(result: &RunResult) -> String {
    let credibility = is_credibility_run(result);
    csv_string(|w| {
        w.write_record(metrics_header(result.config.n_clients, credibility))?;
        for r in &result.records {
            let mut row = vec![
                r.round.to_string(),
                format_float(r.test_accuracy),
                format_float(r.test_loss),
            ];
            for v in [&r.per_client_credibility, &r.per_client_weight].into_iter().flatten() {
                row.extend(v.iter().map(|&x| format_float(x)));
            }
            w.write_record(row)?;
        }
        Ok(())
    })
}

/// One row per round, one column per client; `None` for other rules.
pub fn credibility_csv(result: &RunResult) -> Option<String> {
    if !is_credibility_run(result) {
        return None;
    }
    Some(csv_string(|w| {
        let mut header = vec!["round".to_string()];
        header.extend((0..result.config.n_clients).map(|i| format!("cred_{i}")));
        w.write_record(header)?;
        for r in &result.records {
            let mut row = vec![r.round.to_string()];
            row.extend(
                r.per_client_credibility
                    .iter()
                    .flatten()
                    .map(|&x| format_float(x)),
            );
            w.write_record(row)?;
        }
        Ok(())
    }))
}

pub fn manifest_json(id: &str, config: &ExperimentConfig, outcome: &std::result::Result<RunResult, String>, wall_ms: f64) -> serde_json::Value {
    let mut m = json!({
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "run_id": id,
        "master_seed": config.master_seed,
        "config": config,
        "wall_time_ms": wall_ms,
    });
    match outcome {
        Ok(r) => {
            m["status"] = json!("ok");
            m["final_accuracy"] = json!(r.final_accuracy);
            m["best_accuracy"] = json!(r.best_accuracy);
            m["round_wall_time_ms"] = json!(r.records.iter().map(|r| r.wall_time_ms).collect::<Vec<_>>());
        }
        Err(msg) => {
            m["status"] = json!("failed");
            m["diagnostic"] = json!(msg);
        }
    }
    m
}

/// One finished (or failed) run of a matrix.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub id: String,
    pub config: ExperimentConfig,
    pub result: std::result::Result<RunResult, String>,
}

impl RunOutcome {
    pub fn summary_row(&self) -> Vec<String> {
        let c = &self.config;
        let (fin, best, status, diag) = match &self.result {
            Ok(r) => (format_float(r.final_accuracy), format_float(r.best_accuracy), "ok", String::new()),
            Err(e) => (String::new(), String::new(), "failed", e.clone()),
        };
        vec![
            c.dataset.short_name(),
            c.partition.short_name().into(),
            c.attack.short_name().into(),
            c.attacker_ids().len().to_string(),
            c.aggregator.name().into(),
            c.master_seed.to_string(),
            fin,
            best,
            status.into(),
            diag,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct MatrixOutcome {
    pub runs: Vec<RunOutcome>,
    pub summary_path: PathBuf,
}

impl MatrixOutcome {
    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.result.is_err()).count()
    }
}

pub fn summary_csv(runs: &[RunOutcome]) -> String {
    csv_string(|w| {
        w.write_record(SUMMARY_HEADER)?;
        for r in runs {
            w.write_record(r.summary_row())?;
        }
        Ok(())
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Run directory name: position in the matrix plus the config label.
pub fn run_id(index: usize, config: &ExperimentConfig) -> String {
    format!("{index:03}-{}", config.label())
}

fn run_one(index: usize, config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let id = run_id(index, config);
    let dir = out_dir.join("runs").join(&id);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let started = Instant::now();
    let result = run_experiment(config).map_err(|e| e.to_string());
    let wall = started.elapsed().as_secs_f64() * 1e3;
    if let Ok(r) = &result {
        write(&dir.join("metrics.csv"), &metrics_csv(r))?;
        if let Some(c) = credibility_csv(r) {
            write(&dir.join("credibility.csv"), &c)?;
        }
    }
    let manifest = serde_json::to_string_pretty(&manifest_json(&id, config, &result, wall))?;
    write(&dir.join("manifest.json"), &manifest)?;
    Ok(RunOutcome {
        id,
        config: config.clone(),
        result,
    })
}

/// Run every config, at most `jobs` worker threads in total (`0` means one
/// per core), and write all artifacts under `out_dir`. Failed runs are
/// recorded in the summary rather than aborting the matrix; only I/O errors
/// are returned as `Err`.
pub fn run_matrix(configs: &[ExperimentConfig], out_dir: &Path, jobs: usize) -> Result<MatrixOutcome> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    let runs = pool.install(|| {
        configs
            .par_iter()
            .enumerate()
            .map(|(i, c)| run_one(i, c, out_dir))
            .collect::<Result<Vec<_>>>()
    })?;
    let summary_path = out_dir.join("summary.csv");
    write(&summary_path, &summary_csv(&runs))?;
    Ok(MatrixOutcome { runs, summary_path })
}

//! TOML experiment files and sweep expansion.
//!
//! A file holds one base [`ExperimentConfig`] at the top level plus an
//! optional `[sweep]` table whose lists are crossed:
//!
//! ```toml
//! rounds = 20
//! [dataset]
//! kind = "synth"
//! [aggregator]
//! kind = "fedcredit"
//!
//! [sweep]
//! attack = [{ kind = "sign_flip" }, { kind = "pairwise" }]
//! num_malicious = [1, 2, 3]
//! seed = [0, 1]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::aggregators::AggregatorSpec;
use crate::attacks::AttackSpec;
use crate::error::{Error, Result};
use crate::simulator::{DatasetSource, ExperimentConfig, PartitionSpec};

/// Lists crossed over the base config. Unset axes keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub partition: Option<Vec<PartitionSpec>>,
    pub attack: Option<Vec<AttackSpec>>,
    pub num_malicious: Option<Vec<usize>>,
    pub aggregator: Option<Vec<AggregatorSpec>>,
    pub seed: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentMatrix {
    pub base: ExperimentConfig,
    pub sweep: Sweep,
}

impl ExperimentMatrix {
    pub fn single(base: ExperimentConfig) -> Self {
        ExperimentMatrix {
            base,
            sweep: Sweep::default(),
        }
    }

    /// Cross product in the order partition, attack, attacker count,
    /// aggregator, seed (last varies fastest). Every config is resolved.
    pub fn expand(&self) -> Result<Vec<ExperimentConfig>> {
        fn axis<T: Clone>(values: &Option<Vec<T>>, base: T, field: &str) -> Result<Vec<T>> {
            match values {
                Some(v) if v.is_empty() => Err(Error::config(format!("sweep.{field}"), "list is empty")),
                Some(v) => Ok(v.clone()),
                None => Ok(vec![base]),
            }
        }
        let b = &self.base;
        let partitions = axis(&self.sweep.partition, b.partition, "partition")?;
        let attacks = axis(&self.sweep.attack, b.attack, "attack")?;
        let counts = axis(&self.sweep.num_malicious, b.num_malicious, "num_malicious")?;
        let aggregators = axis(&self.sweep.aggregator, b.aggregator, "aggregator")?;
        let seeds = axis(&self.sweep.seed, b.master_seed, "seed")?;
        if self.sweep.num_malicious.is_some() && b.malicious_ids.is_some() {
            return Err(Error::config(
                "sweep.num_malicious",
                "cannot be combined with explicit malicious_ids",
            ));
        }
        let mut out = Vec::new();
        for &partition in &partitions {
            for &attack in &attacks {
                for &num_malicious in &counts {
                    for &aggregator in &aggregators {
                        for &master_seed in &seeds {
                            let cfg = ExperimentConfig {
                                partition,
                                attack,
                                num_malicious,
                                aggregator,
                                master_seed,
                                ..b.clone()
                            };
                            out.push(cfg.resolve()?);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Overrides applied on top of a parsed file, as given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// `dotted.key=value` pairs; values are TOML literals, bare words are strings.
    pub pairs: Vec<String>,
    /// Replaces `master_seed` and any seed sweep.
    pub seed: Option<u64>,
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentMatrix> {
    load_config_with(path, &Overrides::default())
}

pub fn load_config_with(path: impl AsRef<Path>, overrides: &Overrides) -> Result<ExperimentMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
    let base_dir = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, path, base_dir, overrides)
}

/// Parse a config document. `path` is only used in messages; relative data
/// paths are resolved against `base_dir`.
pub fn parse_config(text: &str, path: &Path, base_dir: &Path, overrides: &Overrides) -> Result<ExperimentMatrix> {
    let mut table: Table = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        Error::ConfigParse {
            path: path.to_path_buf(),
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    for pair in &overrides.pairs {
        apply_override(&mut table, pair)?;
    }
    if let Some(seed) = overrides.seed {
        table.insert("master_seed".into(), Value::Integer(seed as i64));
        if let Some(Value::Table(sweep)) = table.get_mut("sweep") {
            sweep.remove("seed");
        }
    }

    let sweep_value = table.remove("sweep");
    let located = |e: toml::de::Error, prefix: &str| {
        let message = e.message().to_string();
        let (line, column) = locate_key(text, &message);
        Error::ConfigParse {
            path: path.to_path_buf(),
            line,
            column,
            message: if prefix.is_empty() { message } else { format!("in [{prefix}]: {message}") },
        }
    };
    let mut base: ExperimentConfig =
        Value::Table(table.clone()).try_into().map_err(|e| located(e, ""))?;
    check_known_keys(&Value::Table(table), &toml::Value::try_from(&base).expect("serializable"), "")
        .map_err(|key| unknown_key(text, path, &key))?;

    let sweep = match sweep_value {
        None => Sweep::default(),
        Some(v) => {
            let sweep: Sweep = v.clone().try_into().map_err(|e| located(e, "sweep"))?;
            check_known_keys(&v, &toml::Value::try_from(&sweep).expect("serializable"), "sweep")
                .map_err(|key| unknown_key(text, path, &key))?;
            sweep
        }
    };

    if let DatasetSource::Idx {
        train_images,
        train_labels,
        test_images,
        test_labels,
        ..
    } = &mut base.dataset
    {
        for p in [train_images, train_labels, test_images, test_labels] {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
    }
    Ok(ExperimentMatrix { base, sweep })
}

/// Set `a.b.c = value` in the table, creating intermediate tables.
pub fn apply_override(table: &mut Table, pair: &str) -> Result<()> {
    let (key, raw) = pair
        .split_once('=')
        .ok_or_else(|| Error::config(pair, "override must look like key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(key, "empty key segment in override"));
    }
    let mut cursor = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(key, format!("`{part}` is not a table")))?;
    }
    cursor.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Every key in `given` must survive a deserialize/serialize round trip.
/// This catches extra fields next to unit variants such as `kind = "median"`,
/// which serde's tagged enums otherwise ignore.
fn check_known_keys(given: &Value, parsed: &Value, prefix: &str) -> std::result::Result<(), String> {
    match (given, parsed) {
        (Value::Table(g), Value::Table(p)) => {
            for (k, v) in g {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                match p.get(k) {
                    Some(pv) => check_known_keys(v, pv, &path)?,
                    None => return Err(path),
                }
            }
            Ok(())
        }
        (Value::Array(g), Value::Array(p)) => {
            for (i, (gv, pv)) in g.iter().zip(p).enumerate() {
                check_known_keys(gv, pv, &format!("{prefix}[{i}]"))?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn unknown_key(text: &str, path: &Path, key: &str) -> Error {
    let leaf = key.rsplit('.').next().unwrap_or(key);
    let leaf = leaf.split('[').next().unwrap_or(leaf);
    let (line, column) = find_key(text, leaf).unwrap_or((1, 1));
    Error::ConfigParse {
        path: path.to_path_buf(),
        line,
        column,
        message: format!("unknown field `{key}`"),
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Position of the first backticked name in a serde message, if it occurs as
/// a key in the source.
fn locate_key(text: &str, message: &str) -> (usize, usize) {
    message
        .split('`')
        .nth(1)
        .and_then(|name| find_key(text, name))
        .unwrap_or((1, 1))
}

fn find_key(text: &str, name: &str) -> Option<(usize, usize)> {
    for (i, line) in text.lines().enumerate() {
        let mut search = 0;
        while let Some(pos) = line[search..].find(name) {
            let start = search + pos;
            let end = start + name.len();
            let before_ok = line[..start]
                .chars()
                .next_back()
                .map_or(true, |c| !(c.is_alphanumeric() || c == '_'));
            let rest = line[end..].trim_start();
            if before_ok && (rest.starts_with('=') || rest.starts_with(']')) {
                return Some((i + 1, line[..start].chars().count() + 1));
            }
            search = end;
        }
    }
    None
}

/// Resolve an output directory: explicit flag, else environment, else `results`.
pub fn default_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("FEDCREDIT_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

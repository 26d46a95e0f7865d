use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SYNTH: &str = r#"
rounds = 3
n_clients = 5
num_malicious = 1

[dataset]
kind = "synth"
n_train = 300
n_test = 100

[model]
hidden = [8, 8]

[train]
learning_rate = 0.05
batch_size = 16
local_epochs = 1

[attack]
kind = "sign_flip"

[aggregator]
kind = "fedcredit"
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fedcredit"));
    c.env_remove("FEDCREDIT_OUT_DIR");
    c
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

#[test]
fn shipped_configs_validate() {
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let o = run(&["validate", "--config", path.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn run_writes_the_expected_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SYNTH);
    let out = tmp.path().join("out");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let summary = read(out.join("summary.csv"));
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "dataset,distribution,attack,f,aggregator,seed,final,best,status,diagnostic"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..6], ["synth", "iid", "SF", "1", "Fed-Credit", "0"]);
    assert_eq!(row[8], "ok");
    assert!(lines.next().is_none());

    let run_dir = out.join("runs").join("000-synth-iid-SF-f1-Fed-Credit-s0");
    let metrics = read(run_dir.join("metrics.csv"));
    let header = metrics.lines().next().unwrap();
    assert!(header.starts_with("round,accuracy,loss,cred_0,"));
    assert!(header.ends_with(",weight_3,weight_4"));
    assert_eq!(metrics.lines().count(), 4);

    let cred = read(run_dir.join("credibility.csv"));
    let rows: Vec<Vec<&str>> = cred.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.len() == 6));
    assert_eq!(rows[3][0], "3");

    let manifest: serde_json::Value = serde_json::from_str(&read(run_dir.join("manifest.json"))).unwrap();
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["master_seed"], 0);
    assert_eq!(manifest["config"]["n_clients"], 5);
    assert_eq!(manifest["round_wall_time_ms"].as_array().unwrap().len(), 3);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &format!("{SYNTH}\n[sweep]\nseed = [0, 1]\n"));
    let mut outputs = Vec::new();
    for (name, jobs) in [("a", "1"), ("b", "2")] {
        let out = tmp.path().join(name);
        let o = run(&["matrix", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", jobs]);
        assert_eq!(code(&o), 0);
        outputs.push(out);
    }
    assert_eq!(read(outputs[0].join("summary.csv")), read(outputs[1].join("summary.csv")));
    for id in ["000-synth-iid-SF-f1-Fed-Credit-s0", "001-synth-iid-SF-f1-Fed-Credit-s1"] {
        for file in ["metrics.csv", "credibility.csv"] {
            let a = std::fs::read(outputs[0].join("runs").join(id).join(file)).unwrap();
            let b = std::fs::read(outputs[1].join("runs").join(id).join(file)).unwrap();
            assert_eq!(a, b, "{id}/{file}");
        }
    }
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_key = write_config(tmp.path(), "k.toml", &SYNTH.replace("rounds = 3", "roundz = 3"));
    let o = run(&["validate", "--config", bad_key.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("roundz") && err.contains("k.toml:2:1"), "{err}");

    let majority = write_config(tmp.path(), "m.toml", &SYNTH.replace("num_malicious = 1", "num_malicious = 3"));
    assert_eq!(code(&run(&["validate", "--config", majority.to_str().unwrap()])), 2);

    let missing = tmp.path().join("absent.toml");
    assert_eq!(code(&run(&["validate", "--config", missing.to_str().unwrap()])), 2);

    let sweep = write_config(tmp.path(), "s.toml", &format!("{SYNTH}\n[sweep]\nseed = [0, 1]\n"));
    let out = tmp.path().join("out");
    assert_eq!(code(&run(&["run", "--config", sweep.to_str().unwrap(), "--out", out.to_str().unwrap()])), 2);

    let cfg = write_config(tmp.path(), "c.toml", SYNTH);
    let o = run(&["validate", "--config", cfg.to_str().unwrap(), "--override", "aggregator.kind=bogus"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn failed_run_exits_1_and_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{SYNTH}\n[partition]\nkind = \"dirichlet\"\nconcentration = 0.5\nmin_per_client = 200\n");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let out = tmp.path().join("out");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let summary = read(out.join("summary.csv"));
    let row = summary.lines().nth(1).unwrap();
    assert!(row.contains(",failed,"), "{row}");
    let manifest: serde_json::Value =
        serde_json::from_str(&read(out.join("runs/000-synth-noniid-SF-f1-Fed-Credit-s0/manifest.json"))).unwrap();
    assert_eq!(manifest["status"], "failed");
}

#[test]
fn out_dir_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SYNTH);
    let out = tmp.path().join("from-env");
    let o = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--seed", "7"])
        .env("FEDCREDIT_OUT_DIR", &out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(read(out.join("summary.csv")).contains(",Fed-Credit,7,"));
}

#[test]
fn results_row_config_expands_to_24_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("mnist-iid-sf-row.toml");
    let out = tmp.path().join("row");
    let o = run(&[
        "matrix",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--override",
        "rounds=1",
        "--override",
        "dataset.train_limit=400",
        "--override",
        "dataset.test_limit=100",
        "--override",
        "model.hidden=[8, 8]",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read(out.join("summary.csv"));
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 24);
    assert!(rows.iter().all(|r| r.starts_with("mnist-subset,iid,SF,") && r.contains(",ok,")));
    let rules: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.split(',').nth(4).unwrap()).collect();
    assert_eq!(rules.len(), 8);
    let runs = std::fs::read_dir(out.join("runs")).unwrap().count();
    assert_eq!(runs, 24);
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fedcredit::config::{default_out_dir, load_config_with, Overrides};
use fedcredit::report::run_matrix;
use fedcredit::Error;

#[derive(Parser)]
#[command(name = "fedcredit", version, about = "Federated-learning poisoning and defense simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment (the config must not sweep).
    Run(Common),
    /// Run every combination in the config's [sweep] table.
    Matrix(Common),
    /// Parse and resolve the config without running anything.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, env = "FEDCREDIT_OUT_DIR")]
    out: Option<PathBuf>,
    /// Master seed; replaces any seed sweep.
    #[arg(long)]
    seed: Option<u64>,
    /// `dotted.key=value`, applied after the file is read.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

const EXIT_RUN_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(if err.is_config_error() { EXIT_CONFIG } else { EXIT_RUN_FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Run(a) => ("run", a),
        Command::Matrix(a) => ("matrix", a),
        Command::Validate(a) => ("validate", a),
    };
    let overrides = Overrides {
        pairs: args.overrides,
        seed: args.seed,
    };
    let configs = match load_config_with(&args.config, &overrides).and_then(|m| m.expand()) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if mode == "run" && configs.len() != 1 {
        eprintln!(
            "error: config expands to {} runs; use `fedcredit matrix` for sweeps",
            configs.len()
        );
        return ExitCode::from(EXIT_CONFIG);
    }
    if mode == "validate" {
        for c in &configs {
            println!("{}", c.label());
        }
        println!("{} run(s) ok", configs.len());
        return ExitCode::SUCCESS;
    }

    let out = default_out_dir(args.out);
    let outcome = match run_matrix(&configs, &out, args.jobs) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    for run in &outcome.runs {
        match &run.result {
            Ok(r) => println!("{}  final {:.4}  best {:.4}", run.id, r.final_accuracy, r.best_accuracy),
            Err(e) => println!("{}  FAILED: {e}", run.id),
        }
    }
    println!("summary: {}", outcome.summary_path.display());
    if outcome.failures() > 0 {
        eprintln!("{} of {} runs failed", outcome.failures(), outcome.runs.len());
        return ExitCode::from(EXIT_RUN_FAILURE);
    }
    ExitCode::SUCCESS
}

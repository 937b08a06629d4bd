//! `qextra`: run extrapolation experiments from config files.
//!
//! Exit codes: 0 success, 1 usage or config error (nothing written),
//! 2 numerical failure, 3 non-convergence (partial artifacts written).

mod config;
mod error;
mod output;
mod pipelines;
mod reproduce;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{ExperimentConfig, ModelSpec, OracleSpec, Pipeline};
use error::CliError;
use reproduce::{Manifest, ManifestRun};

/// Environment override for the worker count.
const WORKERS_ENV: &str = "QEXTRA_WORKERS";
const DEFAULT_OUT_DIR: &str = "qextra-out";

#[derive(Parser)]
#[command(name = "qextra", version, about = "Energy extrapolation for QA, VQE and QITE on a classical simulator")]
struct Cli {
    /// Master seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads [env: QEXTRA_WORKERS; default: available parallelism].
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; overrides the config's `out_dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Run a bundled experiment set into `<out-dir>/<tag>/`.
    Reproduce {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(reproduce::tags()))]
        tag: String,
    },
    /// Exact low-lying spectrum of a model with default couplings.
    Oracle {
        model: OracleModel,
        n: usize,
        /// Number of levels to report.
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleModel {
    Tfim,
    Xyz,
    Rfim,
    Transverse,
}

fn workers(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Schema(format!("{WORKERS_ENV} must be a positive integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn init_pool(n: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Schema("worker count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    with_seed(ExperimentConfig::parse(&text)?, seed)
}

fn with_seed(mut cfg: ExperimentConfig, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Execute one validated config and write its artifacts into `dir`.
fn run_into(cfg: &ExperimentConfig, dir: &Path) -> Result<serde_json::Value, CliError> {
    let outcome = pipelines::execute(cfg)?;
    output::write(dir, &outcome.artifacts, &cfg.hash(), cfg.seed)?;
    outcome.status.map(|()| outcome.artifacts.report)
}

fn summarize(report: &serde_json::Value) -> String {
    let mut parts = Vec::new();
    if let Some(e) = report.get("e_gs").and_then(|v| v.as_f64()) {
        parts.push(format!("E_gs = {e:.10}"));
    }
    if let Some(err) = report.get("err").filter(|v| !v.is_null()) {
        if let (Some(x), Some(r)) = (err.get("e_extrp").and_then(|v| v.as_f64()), err.get("err").and_then(|v| v.as_f64())) {
            parts.push(format!("E_extrp = {x:.10}"));
            parts.push(format!("ERR = {r:.4}"));
        }
    }
    parts.join(", ")
}

fn reproduce(tag: &str, seed: Option<u64>, root: &Path) -> Result<(), CliError> {
    let bundle = reproduce::find(tag).ok_or_else(|| CliError::Schema(format!("unknown tag '{tag}'")))?;
    let configs = bundle
        .configs
        .iter()
        .map(|(name, text)| Ok((*name, with_seed(ExperimentConfig::parse(text)?, seed)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let dir = root.join(tag);
    let mut runs = Vec::new();
    let mut worst: Option<CliError> = None;
    for (name, cfg) in &configs {
        let result = run_into(cfg, &dir.join(name));
        match &result {
            Ok(report) => println!("{tag}/{name}: {}", summarize(report)),
            Err(e) => eprintln!("{tag}/{name}: {e}"),
        }
        let (exit_code, error) = match result {
            Ok(_) => (0, None),
            Err(e) => {
                let out = (e.exit_code(), Some(e.to_string()));
                if worst.as_ref().map_or(true, |w| e.exit_code() > w.exit_code()) {
                    worst = Some(e);
                }
                out
            }
        };
        runs.push(ManifestRun { name: name.to_string(), config_hash: cfg.hash(), exit_code, error });
    }
    let manifest = Manifest {
        tag: tag.to_string(),
        seed: configs.first().map_or(0, |(_, c)| c.seed),
        expected: bundle.expected.iter().map(|s| s.to_string()).collect(),
        runs,
    };
    output::write_json(&dir.join("manifest.json"), &manifest)?;
    worst.map_or(Ok(()), Err)
}

fn oracle_config(model: OracleModel, n: usize, levels: usize, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let model = match model {
        OracleModel::Tfim => ModelSpec::Tfim { n, j: 1.0, h: 1.0, periodic: true },
        OracleModel::Xyz => ModelSpec::Xyz { n, jx: 2.0, jy: 1.0, jz: 0.5 },
        OracleModel::Rfim => ModelSpec::Rfim { n, field_seed: 0 },
        OracleModel::Transverse => ModelSpec::Transverse { n },
    };
    let cfg = ExperimentConfig {
        pipeline: Pipeline::Oracle,
        seed: 0,
        out_dir: None,
        model,
        integrator: None,
        oracle: Some(OracleSpec { levels }),
        anneal: None,
        adaptive: None,
        vqe: None,
        noise: None,
        qite: None,
        theory: None,
        err_sweep: None,
    };
    with_seed(cfg, seed)
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    init_pool(workers(cli.workers)?)?;
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config, cli.seed)?;
            let dir = cli.out_dir.or_else(|| cfg.out_dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| DEFAULT_OUT_DIR.into());
            let report = run_into(&cfg, &dir)?;
            println!("{}: {}", cfg.pipeline.name(), summarize(&report));
            Ok(())
        }
        Command::Reproduce { tag } => {
            reproduce(&tag, cli.seed, &cli.out_dir.unwrap_or_else(|| DEFAULT_OUT_DIR.into()))
        }
        Command::Oracle { model, n, levels } => {
            let cfg = oracle_config(model, n, levels, cli.seed)?;
            let outcome = pipelines::execute(&cfg)?;
            if let Some(dir) = &cli.out_dir {
                output::write(dir, &outcome.artifacts, &cfg.hash(), cfg.seed)?;
            }
            println!("{}", serde_json::to_string_pretty(&outcome.artifacts.report).expect("serializable"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qextra: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

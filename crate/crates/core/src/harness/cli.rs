//! `vehids` command line. Exit codes: 0 success, 1 usage or config error,
//! 2 runtime failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::config::RunConfig;
use super::experiment::{run_experiment, train_model, ExperimentOutput};
use super::output::{metrics_json, report_json, to_json_bytes, write_atomic, write_run_csv, write_sweep_csv};
use super::sweep::{best_row, sweep_thresholds, SweepRow};
use super::HarnessError;
use crate::learner::{model_from_str, model_to_string, write_loss_csv, MlpModel};
use crate::vehicle_sim::{run_log, write_log_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vehids", version, about = "Residual-based DoS detection experiments")]
struct Cli {
    /// TOML config; defaults apply to anything not set.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Overrides `run.out_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a clean (attack-free) simulator log: sim_log.csv.
    Simulate,
    /// Train the dynamics model offline: model.txt and loss.csv.
    Train {
        /// Where to write the weights (default `<out>/model.txt`).
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
        /// Overrides `learner.epochs`.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// One attacked run: run_<estimator>.csv and metrics.json.
    Run {
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
    },
    /// Threshold sweep over both estimators: sweep.csv.
    Sweep {
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
    },
    /// Best operating point per estimator: report.json and report_sweep.csv.
    Report {
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                EXIT_CONFIG
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, HarnessError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.run.out_dir = out.clone();
    }
    Ok(cfg)
}

fn load_model(cfg: &RunConfig) -> Result<Option<MlpModel>, HarnessError> {
    if !cfg.filter.estimator.needs_model() {
        return Ok(None);
    }
    cfg.check_model_available()?;
    let path = cfg.model_path();
    let text = std::fs::read_to_string(&path)
        .map_err(|source| HarnessError::Io { path: path.display().to_string(), source })?;
    Ok(Some(model_from_str(&text)?))
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing to memory cannot fail");
    buf
}

fn experiment(cfg: &mut RunConfig, model: Option<PathBuf>) -> Result<ExperimentOutput, HarnessError> {
    if model.is_some() {
        cfg.filter.model_path = model;
    }
    let mlp = load_model(cfg)?;
    run_experiment(cfg, mlp.as_ref())
}

fn sweep(cfg: &mut RunConfig, model: Option<PathBuf>) -> Result<Vec<SweepRow>, HarnessError> {
    let output = experiment(cfg, model)?;
    sweep_thresholds(&output.runs, &cfg.detector, &cfg.sweep.t1_list())
}

fn print_best(rows: &[SweepRow]) {
    for name in ["kf", "ukf_ml"] {
        if let Some(b) = best_row(rows, name) {
            println!(
                "{name}: best t1 = {} (t2 = {}), F1 = {:.4}, TP = {:.4}, FP = {:.4}",
                b.t1, b.t2, b.metrics.f1, b.metrics.tp_rate, b.metrics.fp_rate
            );
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    let mut cfg = load_config(&cli)?;
    let out = cfg.run.out_dir.clone();
    let file = |name: &str| out.join(name);
    match cli.command {
        Command::Simulate => {
            let records = run_log(&cfg.vehicle, &cfg.build_scenario()?)?;
            write_atomic(&file("sim_log.csv"), &csv_bytes(|b| write_log_csv(b, &records)))?;
            println!("wrote {} records to {}", records.len(), file("sim_log.csv").display());
        }
        Command::Train { model, epochs } => {
            if let Some(epochs) = epochs {
                cfg.learner.epochs = epochs;
            }
            let path = model.unwrap_or_else(|| cfg.model_path());
            let report = train_model(&cfg, cfg.run.seed)?;
            write_atomic(&path, model_to_string(&report.model).as_bytes())?;
            write_atomic(&file("loss.csv"), &csv_bytes(|b| write_loss_csv(b, &report.curve)))?;
            println!(
                "trained on {} samples ({} held out, {} outliers dropped); validation RMSE {:.5}",
                report.n_train,
                report.n_val,
                report.outliers_dropped,
                report.final_val_rmse()
            );
            println!("wrote {}", path.display());
        }
        Command::Run { model } => {
            let output = experiment(&mut cfg, model)?;
            for run in &output.runs {
                let name = format!("run_{}.csv", run.kind.name());
                write_atomic(&file(&name), &csv_bytes(|b| write_run_csv(b, run)))?;
            }
            write_atomic(&file("metrics.json"), &to_json_bytes(&metrics_json(&output, &cfg.detector)))?;
            println!("wrote {} run file(s) and metrics.json to {}", output.runs.len(), out.display());
        }
        Command::Sweep { model } => {
            let rows = sweep(&mut cfg, model)?;
            write_atomic(&file("sweep.csv"), &csv_bytes(|b| write_sweep_csv(b, &rows)))?;
            print_best(&rows);
        }
        Command::Report { model } => {
            let rows = sweep(&mut cfg, model)?;
            write_atomic(&file("report.json"), &to_json_bytes(&report_json(cfg.run.seed, &rows)))?;
            write_atomic(&file("report_sweep.csv"), &csv_bytes(|b| write_sweep_csv(b, &rows)))?;
            print_best(&rows);
        }
    }
    Ok(())
}

/// Convenience for tests and scripts.
pub fn run_in(dir: &Path, args: &[&str]) -> i32 {
    let mut full = vec!["vehids".to_string()];
    full.extend(args.iter().map(|a| a.to_string()));
    full.push("--out".into());
    full.push(dir.display().to_string());
    run(full)
}

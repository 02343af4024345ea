//! Command-line front end: one binary, eight subcommands, all driven by the
//! same flat key=value configuration. Path-like flags override their config
//! keys so a single file can drive a whole experiment while stages swap
//! inputs.

mod commands;
mod config;

pub use config::{RunConfig, SiteMode};

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Args, Debug)]
struct Common {
    /// Flat key=value run configuration; built-in defaults apply when omitted.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory for outputs (overrides the config's `out_dir`).
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

/// Flags shared by every command that consumes a trained model.
#[derive(Args, Debug)]
struct ModelData {
    /// Trained model bundle (overrides the config's `model`).
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// JSONL dataset to run on (overrides the config's `data`).
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Gold causal-position oracle, required when the model was trained with
    /// mask_source = oracle.
    #[arg(long, value_name = "FILE")]
    oracle: Option<PathBuf>,
}

#[derive(Parser, Debug)]
#[command(
    name = "causal-attn",
    version,
    about = "Causality-guided text classification: training, attacks, attribution"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the synthetic benchmark splits plus a causal-position oracle.
    GenScm {
        #[command(flatten)]
        common: Common,
    },
    /// Dump per-document knowledge graphs, causal masks, and linearizations.
    ExtractGraph {
        #[command(flatten)]
        common: Common,
        /// JSONL dataset to process (overrides the config's `data`).
        #[arg(long, value_name = "FILE")]
        data: Option<PathBuf>,
    },
    /// Train a classifier and keep the robustness-aware best epoch.
    Train {
        #[command(flatten)]
        common: Common,
        /// Training split (overrides the config's `train_data`).
        #[arg(long, value_name = "FILE")]
        train_data: Option<PathBuf>,
        /// Development split for model selection (overrides `dev_data`).
        #[arg(long, value_name = "FILE")]
        dev_data: Option<PathBuf>,
        /// Gold causal-position oracle for mask_source = oracle.
        #[arg(long, value_name = "FILE")]
        oracle: Option<PathBuf>,
    },
    /// Clean metrics for a trained model on a labeled split.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model_data: ModelData,
    },
    /// Perturbation suite: per-kind consistency and success rates.
    Attack {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model_data: ModelData,
        /// Comma-separated attack kinds, or "all" (overrides the config).
        #[arg(long, value_name = "LIST")]
        kinds: Option<String>,
    },
    /// Erasure attribution scores per (document, gold label).
    Attribute {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model_data: ModelData,
    },
    /// Crucial-word frequency profile from pooled top-k attributions.
    Profile {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model_data: ModelData,
    },
    /// Finite-difference audit of the analytic gradients.
    GradCheck {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> anyhow::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::from_env()?,
    };
    if let Some(dir) = &common.out_dir {
        cfg.out_dir = dir.clone();
    }
    Ok(cfg)
}

fn apply_model_data(cfg: &mut RunConfig, md: ModelData) {
    if md.model.is_some() {
        cfg.model = md.model;
    }
    if md.data.is_some() {
        cfg.data = md.data;
    }
    if md.oracle.is_some() {
        cfg.oracle = md.oracle;
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenScm { common } => commands::gen_scm::run(&load_config(&common)?),
        Command::ExtractGraph { common, data } => {
            let mut cfg = load_config(&common)?;
            if data.is_some() {
                cfg.data = data;
            }
            commands::extract_graph::run(&cfg)
        }
        Command::Train { common, train_data, dev_data, oracle } => {
            let mut cfg = load_config(&common)?;
            if train_data.is_some() {
                cfg.train_data = train_data;
            }
            if dev_data.is_some() {
                cfg.dev_data = dev_data;
            }
            if oracle.is_some() {
                cfg.oracle = oracle;
            }
            commands::train::run(&cfg)
        }
        Command::Evaluate { common, model_data } => {
            let mut cfg = load_config(&common)?;
            apply_model_data(&mut cfg, model_data);
            commands::evaluate::run(&cfg)
        }
        Command::Attack { common, model_data, kinds } => {
            let mut cfg = load_config(&common)?;
            apply_model_data(&mut cfg, model_data);
            if let Some(list) = kinds {
                cfg.attack_kinds = config::parse_kinds(&list)?;
            }
            commands::attack::run(&cfg)
        }
        Command::Attribute { common, model_data } => {
            let mut cfg = load_config(&common)?;
            apply_model_data(&mut cfg, model_data);
            commands::attribute::run(&cfg)
        }
        Command::Profile { common, model_data } => {
            let mut cfg = load_config(&common)?;
            apply_model_data(&mut cfg, model_data);
            commands::profile::run(&cfg)
        }
        Command::GradCheck { common } => commands::grad_check::run(&load_config(&common)?),
    }
}

/// Parses `args` (without the binary name) and runs the selected command.
/// Returns the process exit code: 0 on success (including --help/--version),
/// 2 on a usage error, 1 when the command itself fails.
pub fn run(args: Vec<String>) -> i32 {
    let mut argv = Vec::with_capacity(args.len() + 1);
    argv.push("causal-attn".to_string());
    argv.extend(args);
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

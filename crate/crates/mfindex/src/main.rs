use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mfindex::{pipeline, PipelineConfig};

/// Manifold-feature stock index: constituent selection, index levels and
/// evaluation metrics.
#[derive(Parser)]
#[command(name = "mfindex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic market: quotes.csv and benchmark.csv.
    Synth,
    /// Select constituents from the study year, one list per N.
    Select,
    /// Compute target-year index series from constituent lists.
    Index {
        #[arg(required = true)]
        constituents: Vec<PathBuf>,
    },
    /// Evaluate index series against a benchmark.
    Metrics {
        #[arg(required = true)]
        series: Vec<PathBuf>,
    },
    /// Select, index and evaluate over consecutive year pairs.
    Backtest,
}

/// Each flag overrides the config key of the same name.
#[derive(Args)]
struct Common {
    /// Flat key = value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    quotes: Option<String>,
    #[arg(long, global = true)]
    benchmark: Option<String>,
    #[arg(long, global = true)]
    actions: Option<String>,
    #[arg(long, global = true)]
    study_year: Option<String>,
    #[arg(long, global = true)]
    target_year: Option<String>,
    /// Comma-separated target years for backtest.
    #[arg(long, global = true)]
    years: Option<String>,
    #[arg(long, global = true)]
    k: Option<String>,
    /// Kernel bandwidth, or `auto`.
    #[arg(long, global = true)]
    t: Option<String>,
    /// `paper` or `balanced`.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Comma-separated constituent counts.
    #[arg(long, global = true)]
    n_list: Option<String>,
    #[arg(long, global = true)]
    base_level: Option<String>,
    #[arg(long, global = true)]
    batch: Option<String>,
    #[arg(long, global = true)]
    out_dir: Option<String>,
    #[arg(long, global = true)]
    risk_free: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Write W, A and the eigenbasis alongside constituent lists.
    #[arg(long, global = true)]
    dump_operator: bool,
    /// Any other config key, as KEY=VALUE. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn config(&self) -> mfindex::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| mfindex::Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        let flags = [
            ("quotes", &self.quotes),
            ("benchmark", &self.benchmark),
            ("actions", &self.actions),
            ("study_year", &self.study_year),
            ("target_year", &self.target_year),
            ("years", &self.years),
            ("k", &self.k),
            ("t", &self.t),
            ("mode", &self.mode),
            ("n_list", &self.n_list),
            ("base_level", &self.base_level),
            ("batch", &self.batch),
            ("out_dir", &self.out_dir),
            ("risk_free", &self.risk_free),
            ("seed", &self.seed),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.dump_operator {
            cfg.dump_operator = true;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> mfindex::Result<Vec<PathBuf>> {
    let cfg = cli.common.config()?;
    match cli.command {
        Command::Synth => pipeline::cmd_synth(&cfg),
        Command::Select => pipeline::cmd_select(&cfg),
        Command::Index { constituents } => pipeline::cmd_index(&cfg, &constituents),
        Command::Metrics { series } => pipeline::cmd_metrics(&cfg, &series),
        Command::Backtest => pipeline::cmd_backtest(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("mfindex: error: {e}");
            ExitCode::FAILURE
        }
    }
}

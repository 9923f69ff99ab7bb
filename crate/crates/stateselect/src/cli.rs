//! Command-line surface. Exit status: 0 on success, 1 on any pipeline
//! error, 2 on a usage error, 3 when the exhaustive sweep exceeds its limit.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{MethodChoice, RunConfig};
use crate::error::Result;
use crate::pipeline::{self, BenchKind, GenerateArgs, PredictArgs, SynthPreset};

#[derive(Debug, Parser)]
#[command(name = "stateselect", version, about = "State-variable selection for DMDc surrogate models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a benchmark dataset with known ground truth.
    Generate(GenerateCmd),
    /// Screen candidate channels and write prefilter.csv.
    Prefilter(RunCmd),
    /// Run the cap sweep for the configured methods.
    Select(RunCmd),
    /// Roll a saved model out over a dataset's test split.
    Predict(PredictCmd),
    /// Print the cost table of a results directory.
    Report(ReportCmd),
}

#[derive(Debug, Args)]
pub struct GenerateCmd {
    #[arg(value_enum)]
    pub kind: BenchKind,
    /// Generator spec (TOML) overriding the defaults.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "coupled")]
    pub preset: SynthPreset,
    /// Measurement-noise seed of the synthetic system.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub overwrite: bool,
}

#[derive(Debug, Args)]
pub struct RunCmd {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset manifest (overrides the config file).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<MethodChoice>,
    /// Cap sweep; repeat the flag or separate values with commas.
    #[arg(long = "cap", value_delimiter = ',')]
    pub caps: Vec<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 uses every core).
    #[arg(long, env = "STATESELECT_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub overwrite: bool,
}

impl RunCmd {
    /// Config file values with command-line overrides applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(m) = &self.manifest {
            cfg.manifest = Some(m.clone());
            cfg.data.clear();
        }
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if !self.caps.is_empty() {
            cfg.caps = self.caps.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct PredictCmd {
    /// Model JSON written by `select`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    /// Steps per realization (default: the whole test split).
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Trace CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub overwrite: bool,
}

#[derive(Debug, Args)]
pub struct ReportCmd {
    /// Results directory containing cost_table.csv.
    pub dir: PathBuf,
}

/// Executes one subcommand and returns the text to print.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Generate(g) => {
            let manifest = pipeline::generate(&GenerateArgs {
                kind: g.kind,
                spec: g.spec.clone(),
                preset: g.preset,
                seed: g.seed,
                out: g.out.clone(),
                overwrite: g.overwrite,
            })?;
            Ok(format!("wrote {}\n", manifest.display()))
        }
        Command::Prefilter(r) => {
            let cfg = r.resolve()?;
            let report = pipeline::run_prefilter(&cfg, r.overwrite)?;
            Ok(format!(
                "kept {} of {} candidates\n",
                report.kept.len(),
                report.kept.len() + report.removed.len()
            ))
        }
        Command::Select(r) => {
            let cfg = r.resolve()?;
            pipeline::run_select(&cfg, r.overwrite)?;
            pipeline::report(cfg.out.as_deref().expect("validated"))
        }
        Command::Predict(p) => {
            let rows = pipeline::predict(&PredictArgs {
                model: p.model.clone(),
                manifest: p.manifest.clone(),
                data: Vec::new(),
                train_fraction: p.train_fraction,
                horizon: p.horizon,
                out: p.out.clone(),
                overwrite: p.overwrite,
            })?;
            Ok(format!("wrote {} trace rows to {}\n", rows, p.out.display()))
        }
        Command::Report(r) => pipeline::report(&r.dir),
    }
}

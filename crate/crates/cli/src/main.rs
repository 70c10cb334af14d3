use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use protoscope::config::RunConfig;
use protoscope::pipeline::{cmd_build, cmd_explain, cmd_ingest, cmd_synth, cmd_train, write_artifacts, Outcome};

/// MRI protocol analysis: DICOM ingest, quality labels, classifiers and
/// Shapley explanations of acquisition-parameter trends.
#[derive(Parser)]
#[command(name = "protoscope", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, scrub and tabulate DICOM metadata.
    Ingest(Common),
    /// Build the labelled feature table, correlation reduction and split.
    Build(Common),
    /// Nested cross-validation, final model selection and holdout scores.
    Train(Common),
    /// Shapley attributions, trend summary and figures.
    Explain(Common),
    /// Write a synthetic DICOM cohort with known parameter effects.
    Synth(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Input file or directory; repeatable.
    #[arg(long)]
    input: Vec<PathBuf>,
    /// Override any config key, e.g. `--set grid.gb.stages=100`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                RunConfig::parse(&text).with_context(|| format!("in {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        for o in &self.overrides {
            let (k, v) = o.split_once('=').with_context(|| format!("--set {o:?} is not KEY=VALUE"))?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = Some(seed);
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if !self.input.is_empty() {
            cfg.input = self.input.clone();
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    let (common, command): (&Common, fn(&RunConfig) -> _) = match &cli.command {
        Command::Ingest(c) => (c, cmd_ingest),
        Command::Build(c) => (c, cmd_build),
        Command::Train(c) => (c, cmd_train),
        Command::Explain(c) => (c, cmd_explain),
        Command::Synth(c) => (c, cmd_synth),
    };
    let cfg = common.config()?;
    let outcome: Outcome = command(&cfg)?;
    write_artifacts(&cfg.out, &outcome.artifacts)?;
    for w in &outcome.warnings {
        log::warn!("{w}");
    }
    println!("{}", outcome.summary);
    println!("wrote {} files to {}", outcome.artifacts.len(), cfg.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

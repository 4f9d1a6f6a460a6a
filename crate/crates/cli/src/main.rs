//! `btx`: align document pairs, clean and score the extracted bitext, and
//! subsample it under token budgets.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod manifest;
mod report;

use config::Config;

#[derive(Parser, Debug)]
#[command(name = "btx", version, about = "Bitext mining toolkit")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Fail on the first invalid input instead of skipping it.
    #[arg(long, global = true)]
    strict: bool,

    /// Output directory.
    #[arg(long, global = true, default_value = "btx-out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sentence-align every document pair of a manifest and extract bitext.
    Align(commands::align::AlignArgs),
    /// Deduplicate, drop high-overlap pairs and screen languages.
    Preprocess(commands::preprocess::PreprocessArgs),
    /// Train a projection head on aligned embedding pairs.
    Train(commands::train::TrainArgs),
    /// Margin-score a bitext.
    Score(commands::score::ScoreArgs),
    /// Keep the best-scored pairs under English token budgets.
    Subsample(commands::subsample::SubsampleArgs),
    /// Write the cosine similarity matrix of two documents.
    Heatmap(commands::heatmap::HeatmapArgs),
    /// Alignment F1, ranking AUC and clean-pair fraction.
    Eval(commands::eval::EvalArgs),
    /// Generate a synthetic corpus with planted ground truth.
    GenSynthetic(commands::gen::GenArgs),
}

/// Settings shared by every command after config resolution.
pub struct Ctx {
    pub cfg: Config,
    pub seed: u64,
    pub strict: bool,
    pub out: PathBuf,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = match &cli.common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let seed = cfg.resolve(cli.common.seed, "seed", 0)?;
    let jobs = cfg.resolve(cli.common.jobs, "jobs", 0usize)?;
    let strict = cfg.flag(cli.common.strict, "strict")?;
    fs::create_dir_all(&cli.common.out)
        .with_context(|| format!("cannot create {}", cli.common.out.display()))?;
    let ctx = Ctx {
        cfg,
        seed,
        strict,
        out: cli.common.out,
    };

    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    pool.install(|| match cli.command {
        Command::Align(a) => commands::align::run(&ctx, a),
        Command::Preprocess(a) => commands::preprocess::run(&ctx, a),
        Command::Train(a) => commands::train::run(&ctx, a),
        Command::Score(a) => commands::score::run(&ctx, a),
        Command::Subsample(a) => commands::subsample::run(&ctx, a),
        Command::Heatmap(a) => commands::heatmap::run(&ctx, a),
        Command::Eval(a) => commands::eval::run(&ctx, a),
        Command::GenSynthetic(a) => commands::gen::run(&ctx, a),
    })
}

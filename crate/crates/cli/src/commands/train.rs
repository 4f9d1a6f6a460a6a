use std::path::PathBuf;

use anyhow::{bail, Result};
use btx::harness::precision_at_1;
use btx::mnr::{
    forward_project, load_checkpoint, save_checkpoint, train_projection, write_loss_trace,
    ProjectionModel, TrainConfig,
};
use clap::Args;

use super::load_emb;
use crate::report::Report;
use crate::Ctx;

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Source embeddings; row i pairs with row i of the target file.
    #[arg(long)]
    pub src_emb: PathBuf,
    #[arg(long)]
    pub tgt_emb: PathBuf,
    /// Start from this checkpoint instead of a random projection.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub out_dim: Option<usize>,
    /// Multiplier on cosine similarities inside the loss.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Put the positive inside the log-sum-exp.
    #[arg(long)]
    pub include_positive: bool,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub random_negatives: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub momentum: Option<f64>,
}

pub fn run(ctx: &Ctx, a: TrainArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    let d = TrainConfig::default();
    let tc = TrainConfig {
        window: cfg.resolve(a.window, "window", d.window)?,
        random_negatives: cfg.resolve(a.random_negatives, "random_negatives", d.random_negatives)?,
        batch_size: cfg.resolve(a.batch_size, "batch_size", d.batch_size)?,
        lr: cfg.resolve(a.lr, "lr", d.lr)?,
        epochs: cfg.resolve(a.epochs, "epochs", d.epochs)?,
        seed: ctx.seed,
        momentum: cfg.resolve(a.momentum, "momentum", d.momentum)?,
    };
    tc.validate()?;
    let src = load_emb(&a.src_emb)?;
    let tgt = load_emb(&a.tgt_emb)?;
    if src.count() < 2 {
        bail!("need at least 2 pairs to train, found {}", src.count());
    }

    let init = match &a.init {
        Some(p) => load_checkpoint(p)?,
        None => {
            let out_dim = cfg.resolve(a.out_dim, "out_dim", src.dim())?;
            ProjectionModel::random(out_dim, src.dim(), ctx.seed)?
        }
    };
    let scale = cfg.resolve(a.scale, "scale", init.scale)?;
    let include_positive = a.include_positive || cfg.get::<bool>("include_positive")?.unwrap_or(init.include_positive);
    let init = init.with_scale(scale).with_include_positive(include_positive);

    let outcome = train_projection(&src, &tgt, &tc, init)?;
    save_checkpoint(&outcome.model, ctx.out.join("model.bin"))?;
    write_loss_trace(&outcome.loss_trace, ctx.out.join("loss_trace.tsv"))?;
    let p1 = precision_at_1(
        &forward_project(&src, &outcome.model)?,
        &forward_project(&tgt, &outcome.model)?,
    )?;

    let mut rep = Report::new("train");
    rep.add("pairs", src.count());
    rep.add("epochs", outcome.loss_trace.len());
    rep.add("first_epoch_loss", format!("{:.9}", outcome.loss_trace[0]));
    rep.add("final_epoch_loss", format!("{:.9}", outcome.loss_trace.last().unwrap()));
    rep.add("train_precision_at_1", format!("{p1:.6}"));
    rep.config("out_dim", outcome.model.out_dim());
    rep.config("scale", scale);
    rep.config("include_positive", include_positive);
    rep.config("window", tc.window);
    rep.config("random_negatives", tc.random_negatives);
    rep.config("batch_size", tc.batch_size);
    rep.config("lr", tc.lr);
    rep.config("epochs", tc.epochs);
    rep.config("momentum", tc.momentum);
    rep.config("seed", tc.seed);
    rep.write(&ctx.out)
}

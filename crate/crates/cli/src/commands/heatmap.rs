use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use btx::align::{similarity_matrix, write_similarity_tsv};
use clap::Args;

use super::{load_emb, maybe_project};
use crate::report::Report;
use crate::Ctx;

#[derive(Args, Debug)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub src_emb: PathBuf,
    #[arg(long)]
    pub tgt_emb: PathBuf,
    #[arg(long)]
    pub model: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, a: HeatmapArgs) -> Result<()> {
    let (src, tgt) = maybe_project(a.model.as_deref(), load_emb(&a.src_emb)?, load_emb(&a.tgt_emb)?)?;
    let sim = similarity_matrix(&src, &tgt)?;
    let path = ctx.out.join("heatmap.tsv");
    fs::write(&path, write_similarity_tsv(&sim)).with_context(|| format!("writing {}", path.display()))?;

    let mut rep = Report::new("heatmap");
    rep.add("rows", src.count());
    rep.add("cols", tgt.count());
    rep.config(
        "model",
        a.model.as_ref().map_or("-".to_string(), |m| m.display().to_string()),
    );
    rep.write(&ctx.out)
}

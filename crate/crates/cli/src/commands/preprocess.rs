use std::path::PathBuf;

use anyhow::{bail, Result};
use btx::bitext::{read_bitext, write_bitext, Side};
use btx::embed::save_embeddings;
use btx::preprocess::{preprocess, read_lid, LangFilter, PreprocessConfig, DEFAULT_OVERLAP_THRESHOLD};
use clap::Args;

use super::{load_emb, side_name};
use crate::report::Report;
use crate::Ctx;

#[derive(Args, Debug)]
pub struct PreprocessArgs {
    /// `src<TAB>tgt` bitext.
    #[arg(long)]
    pub bitext: PathBuf,
    /// Embeddings of the bitext's source side, subset alongside the pairs.
    #[arg(long, requires = "tgt_emb")]
    pub src_emb: Option<PathBuf>,
    #[arg(long, requires = "src_emb")]
    pub tgt_emb: Option<PathBuf>,
    /// Language-ID sidecar: `src_lang<TAB>src_conf<TAB>tgt_lang<TAB>tgt_conf`.
    #[arg(long)]
    pub lid: Option<PathBuf>,
    /// Pairs with character overlap above this are removed.
    #[arg(long)]
    pub overlap_threshold: Option<f64>,
    /// Which side is English (`src` or `tgt`).
    #[arg(long)]
    pub en_side: Option<Side>,
    /// Also require the other side to be identified as this language.
    #[arg(long)]
    pub expected_other: Option<String>,
    /// Reject sidecar predictions below this confidence.
    #[arg(long)]
    pub min_confidence: Option<f64>,
}

pub fn run(ctx: &Ctx, a: PreprocessArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    let pc = PreprocessConfig {
        overlap_threshold: cfg.resolve(a.overlap_threshold, "overlap_threshold", DEFAULT_OVERLAP_THRESHOLD)?,
        lang: LangFilter {
            en_side: cfg.resolve(a.en_side, "en_side", Side::Src)?,
            min_confidence: cfg.resolve_opt(a.min_confidence, "min_confidence")?,
            expected_other: cfg.resolve_opt(a.expected_other, "expected_other")?,
        },
    };
    let bitext = read_bitext(&a.bitext)?;
    let lid = a.lid.as_ref().map(read_lid).transpose()?;
    let embs = match (&a.src_emb, &a.tgt_emb) {
        (Some(s), Some(t)) => {
            let (s, t) = (load_emb(s)?, load_emb(t)?);
            if s.count() != bitext.len() || t.count() != bitext.len() {
                bail!(
                    "bitext has {} pairs but embeddings have {} / {} rows",
                    bitext.len(),
                    s.count(),
                    t.count()
                );
            }
            Some((s, t))
        }
        _ => None,
    };

    let outcome = preprocess(&bitext, &pc, lid.as_deref())?;
    let kept: Vec<_> = outcome.kept.iter().map(|&i| bitext[i].clone()).collect();
    write_bitext(ctx.out.join("bitext.tsv"), &kept)?;
    if let Some((s, t)) = &embs {
        save_embeddings(&s.select_rows(&outcome.kept)?, ctx.out.join("bitext.src.emb"))?;
        save_embeddings(&t.select_rows(&outcome.kept)?, ctx.out.join("bitext.tgt.emb"))?;
    }

    let mut rep = Report::new("preprocess");
    rep.add("pairs_in", bitext.len());
    rep.add("removed_dedup", outcome.removed_dedup);
    rep.add("removed_overlap", outcome.removed_overlap);
    rep.add("removed_lang", outcome.removed_lang);
    rep.add("pairs_out", kept.len());
    rep.config("overlap_threshold", pc.overlap_threshold);
    rep.config("en_side", side_name(pc.lang.en_side));
    rep.config("expected_other", pc.lang.expected_other.as_deref().unwrap_or("-"));
    rep.config(
        "min_confidence",
        pc.lang.min_confidence.map_or("-".to_string(), |c| c.to_string()),
    );
    rep.config("lid", if lid.is_some() { "sidecar" } else { "script" });
    rep.write(&ctx.out)
}

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use btx::align::{align_coarse_to_fine_with_stats, align_full_dp, format_alignment, AlignParams, Alignment};
use btx::bitext::{write_bitext, SentencePair};
use btx::embed::{block_embed, save_embeddings, EmbeddingMatrix, IndexBlock};
use clap::Args;
use rayon::prelude::*;

use super::maybe_project;
use crate::manifest::{load_entry, read_manifest, LoadedDoc, Rejected};
use crate::report::Report;
use crate::Ctx;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Coarse,
    Full,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "coarse" => Ok(Method::Coarse),
            "full" => Ok(Method::Full),
            other => Err(format!("expected coarse or full, got `{other}`")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Coarse => "coarse",
            Method::Full => "full",
        })
    }
}

#[derive(Args, Debug)]
pub struct AlignArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Projection checkpoint applied to embeddings before aligning.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// `coarse` (coarse-to-fine, default) or `full` (exact DP).
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub max_block: Option<usize>,
    #[arg(long)]
    pub skip_penalty: Option<f64>,
    #[arg(long)]
    pub block_penalty: Option<f64>,
    #[arg(long)]
    pub baseline_samples: Option<usize>,
    #[arg(long)]
    pub band_width: Option<usize>,
    #[arg(long)]
    pub full_dp_threshold: Option<usize>,
}

struct DocResult {
    doc_id: String,
    alignment: Alignment,
    cells: usize,
    pairs: Vec<SentencePair>,
    src_blocks: Vec<Vec<f32>>,
    tgt_blocks: Vec<Vec<f32>>,
}

fn join_block(sentences: &[String], b: IndexBlock) -> String {
    b.indices()
        .map(|i| sentences[i].replace('\t', " "))
        .collect::<Vec<_>>()
        .join(" ")
}

fn align_doc(
    doc: &LoadedDoc,
    p: &AlignParams,
    method: Method,
    model: Option<&std::path::Path>,
) -> Result<DocResult> {
    let (src, tgt) = maybe_project(model, doc.src.clone(), doc.tgt.clone())?;
    let (alignment, cells) = match method {
        Method::Coarse => align_coarse_to_fine_with_stats(&src, &tgt, p)?,
        Method::Full => (
            align_full_dp(&src, &tgt, p)?,
            (src.count() + 1) * (tgt.count() + 1),
        ),
    };
    let mut pairs = Vec::new();
    let mut src_blocks = Vec::new();
    let mut tgt_blocks = Vec::new();
    for l in alignment.non_null() {
        let (s, t) = (l.src.unwrap(), l.tgt.unwrap());
        pairs.push(SentencePair::new(
            join_block(&doc.src_sentences, s),
            join_block(&doc.tgt_sentences, t),
        ));
        src_blocks.push(block_embed(&doc.src, s)?);
        tgt_blocks.push(block_embed(&doc.tgt, t)?);
    }
    Ok(DocResult {
        doc_id: doc.doc_id.clone(),
        alignment,
        cells,
        pairs,
        src_blocks,
        tgt_blocks,
    })
}

pub fn run(ctx: &Ctx, a: AlignArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    let d = AlignParams::default();
    let p = AlignParams {
        max_block: cfg.resolve(a.max_block, "max_block", d.max_block)?,
        skip_penalty: cfg.resolve(a.skip_penalty, "skip_penalty", d.skip_penalty)?,
        block_penalty: cfg.resolve(a.block_penalty, "block_penalty", d.block_penalty)?,
        baseline_samples: cfg.resolve(a.baseline_samples, "baseline_samples", d.baseline_samples)?,
        band_width: cfg.resolve(a.band_width, "band_width", d.band_width)?,
        full_dp_threshold: cfg.resolve(a.full_dp_threshold, "full_dp_threshold", d.full_dp_threshold)?,
        seed: ctx.seed,
    };
    p.validate()?;
    let method = cfg.resolve(a.method, "method", Method::Coarse)?;

    let (entries, mut rejected) = read_manifest(&a.manifest)?;
    let loaded: Vec<_> = entries.par_iter().map(load_entry).collect();
    let mut docs = Vec::new();
    for (e, r) in entries.iter().zip(loaded) {
        match r {
            Ok(doc) => docs.push(doc),
            Err(reason) => rejected.push(Rejected {
                name: e.doc_id.clone(),
                reason,
            }),
        }
    }
    if let Some(dim) = docs.first().map(|d| d.src.dim()) {
        let (keep, off): (Vec<_>, Vec<_>) = docs.into_iter().partition(|d| d.src.dim() == dim);
        for d in off {
            rejected.push(Rejected {
                name: d.doc_id,
                reason: format!("embedding dim {} differs from {dim}", d.src.dim()),
            });
        }
        docs = keep;
    }
    if ctx.strict && !rejected.is_empty() {
        let list: Vec<String> = rejected.iter().map(|r| format!("{}: {}", r.name, r.reason)).collect();
        bail!("invalid manifest entries:\n  {}", list.join("\n  "));
    }

    let results: Vec<(String, Result<DocResult>)> = docs
        .par_iter()
        .map(|d| (d.doc_id.clone(), align_doc(d, &p, method, a.model.as_deref())))
        .collect();
    let mut done = Vec::new();
    for (id, r) in results {
        match r {
            Ok(r) => done.push(r),
            Err(e) if !ctx.strict => rejected.push(Rejected {
                name: id,
                reason: format!("{e:#}"),
            }),
            Err(e) => return Err(e.context(format!("aligning {id}"))),
        }
    }

    let mut stanzas = String::new();
    let mut pairs = Vec::new();
    let mut src_rows = Vec::new();
    let mut tgt_rows = Vec::new();
    let (mut links, mut null_links, mut cells) = (0usize, 0usize, 0usize);
    for r in &done {
        stanzas.push_str(&format_alignment(Some(&r.doc_id), &r.alignment));
        pairs.extend(r.pairs.iter().cloned());
        src_rows.extend(r.src_blocks.iter().cloned());
        tgt_rows.extend(r.tgt_blocks.iter().cloned());
        links += r.alignment.len();
        null_links += r.alignment.len() - r.alignment.non_null().count();
        cells += r.cells;
    }
    let out = &ctx.out;
    fs::write(out.join("alignments.txt"), stanzas).context("writing alignments.txt")?;
    write_bitext(out.join("bitext.tsv"), &pairs)?;
    if !done.is_empty() {
        let dim = docs[0].src.dim();
        save_embeddings(&EmbeddingMatrix::from_rows(dim, &src_rows)?, out.join("bitext.src.emb"))?;
        save_embeddings(&EmbeddingMatrix::from_rows(dim, &tgt_rows)?, out.join("bitext.tgt.emb"))?;
    }

    let mut rep = Report::new("align");
    rep.add("documents", done.len());
    rep.add("documents_rejected", rejected.len());
    for r in &rejected {
        rep.add(format!("rejected.{}", r.name), &r.reason);
    }
    rep.add("links", links);
    rep.add("null_links", null_links);
    let rate = if links == 0 { 0.0 } else { null_links as f64 / links as f64 };
    rep.add("null_link_rate", format!("{rate:.6}"));
    rep.add("pairs_out", pairs.len());
    rep.add("dp_cells", cells);
    rep.config("method", method);
    rep.config("max_block", p.max_block);
    rep.config("skip_penalty", p.skip_penalty);
    rep.config("block_penalty", p.block_penalty);
    rep.config("baseline_samples", p.baseline_samples);
    rep.config("band_width", p.band_width);
    rep.config("full_dp_threshold", p.full_dp_threshold);
    rep.config("seed", p.seed);
    rep.config(
        "model",
        a.model.as_ref().map_or("-".to_string(), |m| m.display().to_string()),
    );
    rep.write(out)
}

use std::fs;

use anyhow::{Context, Result};
use btx::align::{format_alignment, Alignment, Link};
use btx::bitext::{write_bitext, write_lines, SentencePair, Side};
use btx::embed::{save_embeddings, EmbeddingMatrix, IndexBlock};
use btx::harness::{gen_sentences, gen_synthetic, SyntheticSpec};
use clap::Args;

use crate::report::Report;
use crate::Ctx;

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Document pairs with planted translations.
    #[arg(long)]
    pub docs: Option<usize>,
    /// Document pairs whose two sides are unrelated.
    #[arg(long)]
    pub noise_docs: Option<usize>,
    /// Gold links per clean document.
    #[arg(long)]
    pub pairs_per_doc: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub insert_rate: Option<f64>,
    #[arg(long)]
    pub merge_rate: Option<f64>,
    #[arg(long)]
    pub clean_cos_min: Option<f64>,
    #[arg(long)]
    pub noise_cos_max: Option<f64>,
}

fn doc_seed(seed: u64, k: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k)
}

fn join_block(sentences: &[String], b: IndexBlock) -> String {
    b.indices().map(|i| sentences[i].as_str()).collect::<Vec<_>>().join(" ")
}

struct Doc {
    id: String,
    src_sentences: Vec<String>,
    tgt_sentences: Vec<String>,
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    gold: Alignment,
}

fn null_alignment(n_src: usize, n_tgt: usize) -> Alignment {
    let src = (0..n_src).map(|i| Link {
        src: Some(IndexBlock::single(i)),
        tgt: None,
        cost: 0.0,
    });
    let tgt = (0..n_tgt).map(|j| Link {
        src: None,
        tgt: Some(IndexBlock::single(j)),
        cost: 0.0,
    });
    Alignment::new(src.chain(tgt).collect())
}

pub fn run(ctx: &Ctx, a: GenArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    let d = SyntheticSpec::default();
    let n_docs = cfg.resolve(a.docs, "docs", 4usize)?;
    let n_noise = cfg.resolve(a.noise_docs, "noise_docs", 0usize)?;
    let base = SyntheticSpec {
        n_pairs: cfg.resolve(a.pairs_per_doc, "pairs_per_doc", d.n_pairs)?,
        dim: cfg.resolve(a.dim, "dim", d.dim)?,
        clean_cos_min: cfg.resolve(a.clean_cos_min, "clean_cos_min", d.clean_cos_min)?,
        noise_cos_max: cfg.resolve(a.noise_cos_max, "noise_cos_max", d.noise_cos_max)?,
        insert_rate: cfg.resolve(a.insert_rate, "insert_rate", 0.1)?,
        merge_rate: cfg.resolve(a.merge_rate, "merge_rate", 0.05)?,
        seed: ctx.seed,
    };
    base.validate()?;

    // Sentence ids run across documents so no two sentences share text.
    let (mut next_src, mut next_tgt) = (0usize, 0usize);
    let text_seed = doc_seed(ctx.seed, u64::MAX);
    let mut take = |side: Side, n: usize| {
        let next = match side {
            Side::Src => &mut next_src,
            Side::Tgt => &mut next_tgt,
        };
        let s = gen_sentences(side, *next, n, text_seed ^ *next as u64);
        *next += n;
        s
    };

    let mut docs = Vec::with_capacity(n_docs + n_noise);
    for k in 0..n_docs {
        let c = gen_synthetic(&SyntheticSpec {
            seed: doc_seed(ctx.seed, k as u64),
            ..base.clone()
        })?;
        docs.push(Doc {
            id: format!("doc{k:04}"),
            src_sentences: take(Side::Src, c.src.count()),
            tgt_sentences: take(Side::Tgt, c.tgt.count()),
            src: c.src,
            tgt: c.tgt,
            gold: c.gold,
        });
    }
    for k in 0..n_noise {
        let one = |salt: u64| {
            gen_synthetic(&SyntheticSpec {
                seed: doc_seed(ctx.seed, (n_docs + 2 * k) as u64 + salt),
                insert_rate: 0.0,
                merge_rate: 0.0,
                ..base.clone()
            })
        };
        let src = one(0)?.src;
        let tgt = one(1)?.tgt;
        docs.push(Doc {
            id: format!("noise{k:04}"),
            src_sentences: take(Side::Src, src.count()),
            tgt_sentences: take(Side::Tgt, tgt.count()),
            gold: null_alignment(src.count(), tgt.count()),
            src,
            tgt,
        });
    }

    let dir = ctx.out.join("docs");
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut manifest = String::from("# doc_id\tsrc_sentences\ttgt_sentences\tsrc_embeddings\ttgt_embeddings\n");
    let mut gold_text = String::new();
    let mut gold_pairs = Vec::new();
    let (mut n_src, mut n_tgt) = (0, 0);
    for doc in &docs {
        let name = |ext: &str| format!("docs/{}.{ext}", doc.id);
        write_lines(ctx.out.join(name("src.txt")), &doc.src_sentences)?;
        write_lines(ctx.out.join(name("tgt.txt")), &doc.tgt_sentences)?;
        save_embeddings(&doc.src, ctx.out.join(name("src.emb")))?;
        save_embeddings(&doc.tgt, ctx.out.join(name("tgt.emb")))?;
        manifest.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            doc.id,
            name("src.txt"),
            name("tgt.txt"),
            name("src.emb"),
            name("tgt.emb")
        ));
        gold_text.push_str(&format_alignment(Some(&doc.id), &doc.gold));
        for l in doc.gold.non_null() {
            gold_pairs.push(SentencePair::new(
                join_block(&doc.src_sentences, l.src.unwrap()),
                join_block(&doc.tgt_sentences, l.tgt.unwrap()),
            ));
        }
        n_src += doc.src.count();
        n_tgt += doc.tgt.count();
    }
    fs::write(ctx.out.join("manifest.tsv"), manifest).context("writing manifest.tsv")?;
    fs::write(ctx.out.join("gold_alignments.txt"), gold_text).context("writing gold_alignments.txt")?;
    write_bitext(ctx.out.join("gold_pairs.tsv"), &gold_pairs)?;

    let mut rep = Report::new("gen-synthetic");
    rep.add("documents", n_docs);
    rep.add("noise_documents", n_noise);
    rep.add("src_sentences", n_src);
    rep.add("tgt_sentences", n_tgt);
    rep.add("gold_pairs", gold_pairs.len());
    rep.config("pairs_per_doc", base.n_pairs);
    rep.config("dim", base.dim);
    rep.config("insert_rate", base.insert_rate);
    rep.config("merge_rate", base.merge_rate);
    rep.config("clean_cos_min", base.clean_cos_min);
    rep.config("noise_cos_max", base.noise_cos_max);
    rep.config("seed", ctx.seed);
    rep.write(&ctx.out)
}

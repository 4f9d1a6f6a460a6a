use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use btx::align::{parse_alignments, Alignment};
use btx::bitext::{read_bitext, read_lines, read_scored, SentencePair};
use btx::harness::{link_matches, ranking_auc, F1Score};
use clap::Args;

use crate::report::Report;
use crate::Ctx;

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Predicted alignments; stanzas are matched to `--gold` by doc id.
    #[arg(long, requires = "gold")]
    pub pred: Option<PathBuf>,
    #[arg(long, requires = "pred")]
    pub gold: Option<PathBuf>,
    /// Scored bitext whose scores are ranked against `--labels`.
    #[arg(long, requires = "labels")]
    pub scores: Option<PathBuf>,
    /// One `1` (clean) or `0` (noise) per scored line.
    #[arg(long, requires = "scores")]
    pub labels: Option<PathBuf>,
    /// Bitext TSV whose clean fraction is measured against `--gold-pairs`.
    #[arg(long, conflicts_with_all = ["pairs_src", "pairs_tgt"])]
    pub bitext: Option<PathBuf>,
    /// Parallel source/target line files, as written by `subsample`.
    #[arg(long, requires = "pairs_tgt")]
    pub pairs_src: Option<PathBuf>,
    #[arg(long, requires = "pairs_src")]
    pub pairs_tgt: Option<PathBuf>,
    /// Bitext TSV of the pairs that count as clean.
    #[arg(long)]
    pub gold_pairs: Option<PathBuf>,
}

fn read_alignments(path: &PathBuf) -> Result<Vec<(Option<String>, Alignment)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_alignments(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_label(s: &str, line: usize) -> Result<bool> {
    match s.trim() {
        "1" => Ok(true),
        "0" => Ok(false),
        other => bail!("labels line {line}: expected 0 or 1, got `{other}`"),
    }
}

/// Micro-averaged over documents. A gold document missing from the
/// predictions contributes its gold links as misses; predicted documents
/// without gold are an error.
fn eval_alignments(rep: &mut Report, pred: &PathBuf, gold: &PathBuf) -> Result<()> {
    let pred = read_alignments(pred)?;
    let gold = read_alignments(gold)?;
    let key = |i: usize, id: &Option<String>| id.clone().unwrap_or_else(|| format!("#{i}"));
    let pred: HashMap<String, Alignment> = pred.into_iter().enumerate().map(|(i, (id, a))| (key(i, &id), a)).collect();
    let gold: Vec<(String, Alignment)> = gold.into_iter().enumerate().map(|(i, (id, a))| (key(i, &id), a)).collect();
    let gold_ids: HashSet<&str> = gold.iter().map(|(id, _)| id.as_str()).collect();
    if let Some(extra) = pred.keys().find(|id| !gold_ids.contains(id.as_str())) {
        bail!("predicted document `{extra}` has no gold alignment");
    }
    let (mut c, mut p, mut g, mut missing) = (0, 0, 0, 0);
    for (id, ga) in &gold {
        let (dc, dp, dg) = match pred.get(id) {
            Some(pa) => link_matches(pa, ga),
            None => {
                missing += 1;
                link_matches(&Alignment::new(Vec::new()), ga)
            }
        };
        c += dc;
        p += dp;
        g += dg;
    }
    let s = F1Score::from_counts(c, p, g);
    rep.add("alignment.documents", gold.len());
    rep.add("alignment.documents_missing", missing);
    rep.add("alignment.correct", c);
    rep.add("alignment.predicted", p);
    rep.add("alignment.gold", g);
    rep.add("alignment.precision", format!("{:.6}", s.precision));
    rep.add("alignment.recall", format!("{:.6}", s.recall));
    rep.add("alignment.f1", format!("{:.6}", s.f1));
    Ok(())
}

fn eval_auc(rep: &mut Report, scores: &PathBuf, labels: &PathBuf) -> Result<()> {
    let scored = read_scored(scores)?;
    let labels = read_lines(labels)?
        .iter()
        .enumerate()
        .map(|(i, l)| parse_label(l, i + 1))
        .collect::<Result<Vec<_>>>()?;
    let s: Vec<f64> = scored.iter().map(|p| p.score).collect();
    let auc = ranking_auc(&s, &labels)?;
    rep.add("auc.pairs", s.len());
    rep.add("auc.positives", labels.iter().filter(|&&l| l).count());
    rep.add("auc", format!("{auc:.6}"));
    Ok(())
}

fn eval_clean(rep: &mut Report, pairs: &[SentencePair], gold: &PathBuf) -> Result<()> {
    let gold = read_bitext(gold)?;
    let gold: HashSet<(&str, &str)> = gold.iter().map(|p| (p.src.as_str(), p.tgt.as_str())).collect();
    let clean = pairs
        .iter()
        .filter(|p| gold.contains(&(p.src.as_str(), p.tgt.as_str())))
        .count();
    let fraction = if pairs.is_empty() {
        0.0
    } else {
        clean as f64 / pairs.len() as f64
    };
    rep.add("clean.pairs", pairs.len());
    rep.add("clean.matched", clean);
    rep.add("clean.fraction", format!("{fraction:.6}"));
    Ok(())
}

pub fn run(ctx: &Ctx, a: EvalArgs) -> Result<()> {
    let mut rep = Report::new("eval");
    let mut did = false;
    if let (Some(p), Some(g)) = (&a.pred, &a.gold) {
        eval_alignments(&mut rep, p, g)?;
        did = true;
    }
    if let (Some(s), Some(l)) = (&a.scores, &a.labels) {
        eval_auc(&mut rep, s, l)?;
        did = true;
    }
    let pairs = match (&a.bitext, &a.pairs_src, &a.pairs_tgt) {
        (Some(b), _, _) => Some(read_bitext(b)?),
        (None, Some(s), Some(t)) => {
            let s = read_lines(s)?;
            let t = read_lines(t)?;
            if s.len() != t.len() {
                bail!("source has {} lines but target has {}", s.len(), t.len());
            }
            Some(s.into_iter().zip(t).map(|(s, t)| SentencePair::new(s, t)).collect())
        }
        _ => None,
    };
    match (pairs, &a.gold_pairs) {
        (Some(pairs), Some(g)) => {
            eval_clean(&mut rep, &pairs, g)?;
            did = true;
        }
        (Some(_), None) => bail!("clean fraction needs --gold-pairs"),
        (None, Some(_)) => bail!("--gold-pairs needs --bitext or --pairs-src/--pairs-tgt"),
        (None, None) => {}
    }
    if !did {
        bail!("nothing to evaluate: give --pred/--gold, --scores/--labels or --bitext/--gold-pairs");
    }
    rep.write(&ctx.out)
}

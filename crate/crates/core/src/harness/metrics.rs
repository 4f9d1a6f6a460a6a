use std::collections::HashSet;

use crate::align::Alignment;
use crate::embed::{EmbeddingMatrix, IndexBlock};
use crate::error::{Error, Result};
use crate::margin::knn_cosine;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl F1Score {
    /// From match counts; `0/0` counts as 0.
    pub fn from_counts(correct: usize, n_pred: usize, n_gold: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(correct, n_pred);
        let recall = ratio(correct, n_gold);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

/// `(correct, predicted, gold)` counts of non-null links, where a predicted
/// link is correct only if a gold link has exactly the same blocks.
pub fn link_matches(pred: &Alignment, gold: &Alignment) -> (usize, usize, usize) {
    let key = |l: &crate::align::Link| -> (IndexBlock, IndexBlock) { (l.src.unwrap(), l.tgt.unwrap()) };
    let gold_set: HashSet<_> = gold.non_null().map(key).collect();
    let n_pred = pred.non_null().count();
    let correct = pred.non_null().filter(|l| gold_set.contains(&key(l))).count();
    (correct, n_pred, gold_set.len())
}

/// Strict link F1 over non-null links.
pub fn alignment_f1(pred: &Alignment, gold: &Alignment) -> F1Score {
    let (c, p, g) = link_matches(pred, gold);
    F1Score::from_counts(c, p, g)
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed from mid-ranks.
pub fn ranking_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "scores vs labels",
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Domain("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Domain("both classes must be present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Fraction of sources whose nearest target (ties to the lower index) is the
/// target in the same row.
pub fn precision_at_1(src: &EmbeddingMatrix, tgt: &EmbeddingMatrix) -> Result<f64> {
    if src.count() != tgt.count() {
        return Err(Error::LengthMismatch {
            what: "source vs target rows",
            left: src.count(),
            right: tgt.count(),
        });
    }
    if src.is_empty() {
        return Ok(0.0);
    }
    let nn = knn_cosine(src, tgt, 1)?;
    let hits = (0..src.count()).filter(|&i| nn.indices(i)[0] == i).count();
    Ok(hits as f64 / src.count() as f64)
}

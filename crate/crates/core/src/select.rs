//! Subsampling of scored bitext under an English-side token budget.

use crate::bitext::{ScoredPair, SentencePair, Side};

/// Budgets conventionally used for evaluation, in English tokens.
pub const STANDARD_BUDGETS: [u64; 4] = [2_000_000, 3_000_000, 5_000_000, 7_000_000];

/// Number of maximal non-whitespace runs.
pub fn count_tokens_en(sentence: &str) -> usize {
    sentence.split_whitespace().count()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OverflowPolicy {
    /// Stop at the first pair that would exceed the budget.
    #[default]
    Stop,
    /// Skip pairs that do not fit and keep scanning.
    Skip,
}

/// Indices (in original order) of the pairs selected greedily by descending
/// score while the English token total stays within `budget`.
pub fn subsample_indices(
    scored: &[ScoredPair],
    budget: u64,
    en_side: Side,
    policy: OverflowPolicy,
) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].score.total_cmp(&scored[a].score).then(a.cmp(&b)));

    let mut used = 0u64;
    let mut picked = Vec::new();
    for i in order {
        let p = &scored[i];
        let tokens = count_tokens_en(p.side(en_side)) as u64;
        if used + tokens > budget {
            match policy {
                OverflowPolicy::Stop => break,
                OverflowPolicy::Skip => continue,
            }
        }
        used += tokens;
        picked.push(i);
    }
    picked.sort_unstable();
    picked
}

pub fn subsample(
    scored: &[ScoredPair],
    budget: u64,
    en_side: Side,
    policy: OverflowPolicy,
) -> Vec<SentencePair> {
    subsample_indices(scored, budget, en_side, policy)
        .into_iter()
        .map(|i| SentencePair::new(scored[i].src.clone(), scored[i].tgt.clone()))
        .collect()
}

/// Total English-side tokens of a scored corpus.
pub fn total_tokens(scored: &[ScoredPair], en_side: Side) -> u64 {
    scored
        .iter()
        .map(|p| count_tokens_en(p.side(en_side)) as u64)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(score: f64, src: &str) -> ScoredPair {
        ScoredPair {
            src: src.into(),
            tgt: "t".into(),
            score,
        }
    }

    #[test]
    fn token_counts() {
        assert_eq!(count_tokens_en("hello world"), 2);
        assert_eq!(count_tokens_en(""), 0);
        assert_eq!(count_tokens_en("  a\tb  c "), 3);
    }

    #[test]
    fn greedy_stops_at_first_overflow() {
        let s = vec![sp(3.0, "a b c"), sp(2.0, "d e"), sp(1.0, "f g")];
        let got = subsample(&s, 5, Side::Src, OverflowPolicy::Stop);
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].src, "a b c");
        assert!(subsample(&s, 0, Side::Src, OverflowPolicy::Stop).is_empty());
        assert_eq!(subsample(&s, 100, Side::Src, OverflowPolicy::Stop).len(), 3);
    }

    #[test]
    fn skip_policy_keeps_scanning() {
        let s = vec![sp(3.0, "a b c"), sp(2.0, "d e f"), sp(1.0, "g")];
        assert_eq!(subsample_indices(&s, 4, Side::Src, OverflowPolicy::Stop), vec![0]);
        assert_eq!(subsample_indices(&s, 4, Side::Src, OverflowPolicy::Skip), vec![0, 2]);
    }

    #[test]
    fn output_is_in_corpus_order_and_ties_go_to_lower_index() {
        let s = vec![sp(1.0, "a"), sp(5.0, "b"), sp(1.0, "c"), sp(1.0, "d")];
        assert_eq!(subsample_indices(&s, 3, Side::Src, OverflowPolicy::Stop), vec![0, 1, 2]);
        assert_eq!(subsample_indices(&s, 2, Side::Tgt, OverflowPolicy::Stop), vec![0, 1]);
    }
}

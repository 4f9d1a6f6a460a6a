//! Margin-based scoring of sentence pairs.
//!
//! A pair `(x, y)` scores
//!
//! ```text
//! margin(cos(x, y), sum_{z in NN_k(x)} cos(x, z) / 2k + sum_{z in NN_k(y)} cos(y, z) / 2k)
//! ```
//!
//! with the ratio margin `margin(a, b) = a / b`. Neighborhoods come from an
//! exact brute-force kNN search over the corpus embeddings. Dividing by the
//! neighborhood density penalizes hub vectors that sit close to everything.

use rayon::prelude::*;

use crate::bitext::{ScoredBitext, ScoredPair, SentencePair};
use crate::embed::{dot, ensure_normalized, EmbeddingMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 4;

/// Denominators smaller than this in magnitude are replaced by it.
pub const MARGIN_DENOM_FLOOR: f64 = 1e-9;

const QUERY_BLOCK: usize = 32;
const DB_BLOCK: usize = 256;

/// Top-k neighbors per query, sorted by descending cosine (ties: lower index
/// first).
#[derive(Clone, Debug, PartialEq)]
pub struct KnnResult {
    k: usize,
    indices: Vec<usize>,
    cosines: Vec<f64>,
}

impl KnnResult {
    /// Neighbors per query after capping at the database size.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn queries(&self) -> usize {
        self.indices.len().checked_div(self.k).unwrap_or(0)
    }

    pub fn indices(&self, q: usize) -> &[usize] {
        &self.indices[q * self.k..(q + 1) * self.k]
    }

    pub fn cosines(&self, q: usize) -> &[f64] {
        &self.cosines[q * self.k..(q + 1) * self.k]
    }
}

/// Exact top-k cosine neighbors of each query row among the database rows.
pub fn knn_cosine(queries: &EmbeddingMatrix, db: &EmbeddingMatrix, k: usize) -> Result<KnnResult> {
    knn_impl(queries, db, k, false)
}

fn knn_impl(
    queries: &EmbeddingMatrix,
    db: &EmbeddingMatrix,
    k: usize,
    exclude_diagonal: bool,
) -> Result<KnnResult> {
    if k == 0 {
        return Err(Error::param("k", "must be positive"));
    }
    if queries.dim() != db.dim() {
        return Err(Error::DimMismatch {
            expected: queries.dim(),
            actual: db.dim(),
        });
    }
    let (queries, db) = (ensure_normalized(queries), ensure_normalized(db));
    let available = db.count() - usize::from(exclude_diagonal && db.count() > 0);
    let k_eff = k.min(available);
    if k_eff == 0 {
        return Ok(KnnResult {
            k: 0,
            indices: Vec::new(),
            cosines: Vec::new(),
        });
    }

    let starts: Vec<usize> = (0..queries.count()).step_by(QUERY_BLOCK).collect();
    let blocks: Vec<Vec<TopK>> = starts
        .par_iter()
        .map(|&q0| {
            let q1 = (q0 + QUERY_BLOCK).min(queries.count());
            let mut tops: Vec<TopK> = (q0..q1).map(|_| TopK::new(k_eff)).collect();
            for d0 in (0..db.count()).step_by(DB_BLOCK) {
                let d1 = (d0 + DB_BLOCK).min(db.count());
                for (q, top) in (q0..q1).zip(tops.iter_mut()) {
                    let qrow = queries.row(q);
                    for d in d0..d1 {
                        if exclude_diagonal && d == q {
                            continue;
                        }
                        top.offer(dot(qrow, db.row(d)), d);
                    }
                }
            }
            tops
        })
        .collect();

    let mut indices = Vec::with_capacity(queries.count() * k_eff);
    let mut cosines = Vec::with_capacity(queries.count() * k_eff);
    for top in blocks.into_iter().flatten() {
        for (c, i) in top.items {
            cosines.push(c.clamp(-1.0, 1.0));
            indices.push(i);
        }
    }
    Ok(KnnResult {
        k: k_eff,
        indices,
        cosines,
    })
}

/// Bounded list kept sorted by (cosine desc, index asc). Candidates must be
/// offered in ascending index order.
struct TopK {
    cap: usize,
    items: Vec<(f64, usize)>,
}

impl TopK {
    fn new(cap: usize) -> Self {
        Self {
            cap,
            items: Vec::with_capacity(cap + 1),
        }
    }

    #[inline]
    fn offer(&mut self, cos: f64, idx: usize) {
        if self.items.len() == self.cap && cos <= self.items[self.cap - 1].0 {
            return;
        }
        // an equal cosine already present has a lower index and stays ahead
        let pos = self.items.partition_point(|&(c, _)| c >= cos);
        self.items.insert(pos, (cos, idx));
        self.items.truncate(self.cap);
    }
}

/// Ratio margin `a / b`, with `|b|` floored at [`MARGIN_DENOM_FLOOR`]
/// keeping the sign of `b`.
pub fn margin_ratio(a: f64, b: f64) -> f64 {
    if b.abs() > MARGIN_DENOM_FLOOR {
        a / b
    } else if b < 0.0 {
        a / -MARGIN_DENOM_FLOOR
    } else {
        a / MARGIN_DENOM_FLOOR
    }
}

/// Margin score of one pair from its cosine and the neighbor cosines of
/// each side. `k` is the divisor; it may exceed the number of neighbors
/// supplied.
pub fn margin_score(pair_cos: f64, nn_x: &[f64], nn_y: &[f64], k: usize) -> f64 {
    let denom = 2.0 * k as f64;
    let sx: f64 = nn_x.iter().map(|c| c / denom).sum();
    let sy: f64 = nn_y.iter().map(|c| c / denom).sum();
    margin_ratio(pair_cos, sx + sy)
}

/// Where the neighbors of a sentence are searched.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Neighborhood {
    /// Source sentences look among targets and vice versa.
    #[default]
    CrossLingual,
    /// Each side looks among its own language, excluding the sentence itself.
    SameSide,
}

/// Divisor used when the corpus has fewer than `k` candidate neighbors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KDivisor {
    /// Keep the requested `k`.
    #[default]
    Requested,
    /// Use the number of neighbors actually found.
    Available,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarginConfig {
    pub k: usize,
    pub neighborhood: Neighborhood,
    pub divisor: KDivisor,
}

impl Default for MarginConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            neighborhood: Neighborhood::CrossLingual,
            divisor: KDivisor::Requested,
        }
    }
}

/// Cosine of each aligned row pair `(src[i], tgt[i])`.
pub fn pair_cosines(src: &EmbeddingMatrix, tgt: &EmbeddingMatrix) -> Result<Vec<f64>> {
    check_parallel(src, tgt)?;
    let (src, tgt) = (ensure_normalized(src), ensure_normalized(tgt));
    Ok(src
        .rows()
        .zip(tgt.rows())
        .map(|(s, t)| dot(s, t).clamp(-1.0, 1.0))
        .collect())
}

/// Margin scores of the aligned row pairs `(src[i], tgt[i])`.
pub fn margin_scores(
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    cfg: &MarginConfig,
) -> Result<Vec<f64>> {
    check_parallel(src, tgt)?;
    if src.is_empty() {
        return Ok(Vec::new());
    }
    let (src, tgt) = (ensure_normalized(src), ensure_normalized(tgt));
    let (nn_src, nn_tgt) = match cfg.neighborhood {
        Neighborhood::CrossLingual => (
            knn_impl(&src, &tgt, cfg.k, false)?,
            knn_impl(&tgt, &src, cfg.k, false)?,
        ),
        Neighborhood::SameSide => (
            knn_impl(&src, &src, cfg.k, true)?,
            knn_impl(&tgt, &tgt, cfg.k, true)?,
        ),
    };
    let cos = pair_cosines(&src, &tgt)?;
    Ok((0..src.count())
        .map(|i| {
            let (nx, ny): (&[f64], &[f64]) = if nn_src.k() == 0 {
                (&[], &[])
            } else {
                (nn_src.cosines(i), nn_tgt.cosines(i))
            };
            let k = match cfg.divisor {
                KDivisor::Requested => cfg.k,
                KDivisor::Available => nn_src.k().max(1),
            };
            margin_score(cos[i], nx, ny, k)
        })
        .collect())
}

/// Scores every pair of `bitext`, whose row `i` on each side is embedded by
/// row `i` of the matching matrix. Output keeps the input order.
pub fn score_corpus(
    bitext: &[SentencePair],
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    cfg: &MarginConfig,
) -> Result<ScoredBitext> {
    if bitext.len() != src.count() {
        return Err(Error::LengthMismatch {
            what: "bitext pairs vs source embeddings",
            left: bitext.len(),
            right: src.count(),
        });
    }
    let scores = margin_scores(src, tgt, cfg)?;
    Ok(bitext
        .iter()
        .zip(scores)
        .map(|(p, score)| ScoredPair {
            src: p.src.clone(),
            tgt: p.tgt.clone(),
            score,
        })
        .collect())
}

fn check_parallel(src: &EmbeddingMatrix, tgt: &EmbeddingMatrix) -> Result<()> {
    if src.count() != tgt.count() {
        return Err(Error::LengthMismatch {
            what: "source vs target embeddings",
            left: src.count(),
            right: tgt.count(),
        });
    }
    if src.dim() != tgt.dim() {
        return Err(Error::DimMismatch {
            expected: src.dim(),
            actual: tgt.dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis3() -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(
            3,
            &[[1.0f32, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        )
        .unwrap()
    }

    #[test]
    fn knn_examples() {
        let db = basis3();
        let q = EmbeddingMatrix::from_rows(3, &[[1.0f32, 0.0, 0.0]]).unwrap();
        let r = knn_cosine(&q, &db, 1).unwrap();
        assert_eq!(r.indices(0), &[0]);
        assert_eq!(r.cosines(0), &[1.0]);

        let h = std::f32::consts::FRAC_1_SQRT_2;
        let q = EmbeddingMatrix::from_rows(3, &[[h, h, 0.0]]).unwrap();
        let r = knn_cosine(&q, &db, 2).unwrap();
        assert_eq!(r.indices(0), &[0, 1]);
        assert!((r.cosines(0)[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
        assert_eq!(r.cosines(0)[0], r.cosines(0)[1]);

        let four = EmbeddingMatrix::from_rows(1, &[[1.0f32], [-1.0], [1.0], [1.0]]).unwrap();
        let r = knn_cosine(&four, &four, 10).unwrap();
        assert_eq!(r.k(), 4);
        assert_eq!(r.indices(1), &[1, 0, 2, 3]);
    }

    #[test]
    fn knn_errors() {
        let db = basis3();
        assert!(knn_cosine(&db, &db, 0).is_err());
        let other = EmbeddingMatrix::from_rows(2, &[[1.0f32, 0.0]]).unwrap();
        assert!(matches!(knn_cosine(&other, &db, 1), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(margin_ratio(0.8, 0.4), 2.0);
        assert_eq!(margin_ratio(0.37, 0.37), 1.0);
        assert_eq!(margin_ratio(0.5, 0.0), 0.5 / 1e-9);
        assert_eq!(margin_ratio(0.5, -1e-12), -0.5 / 1e-9);
    }

    #[test]
    fn margin_score_examples() {
        assert_eq!(margin_score(0.8, &[0.4; 4], &[0.4; 4], 4), 2.0);
        assert!((margin_score(0.9, &[0.5], &[0.7], 1) - 1.5).abs() < 1e-12);
        let c = 0.3;
        assert!((margin_score(c, &[c; 4], &[c; 4], 4) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_corpus_scores_one() {
        let m = basis3();
        let bitext: Vec<_> = (0..3).map(|i| SentencePair::new(format!("s{i}"), format!("t{i}"))).collect();
        let cfg = MarginConfig {
            k: 1,
            ..Default::default()
        };
        let scored = score_corpus(&bitext, &m, &m, &cfg).unwrap();
        assert!(scored.iter().all(|p| p.score == 1.0));
        assert_eq!(scored[2].src, "s2");
    }

    #[test]
    fn single_pair_keeps_requested_k_by_default() {
        let s = EmbeddingMatrix::from_rows(2, &[[1.0f32, 0.0]]).unwrap();
        let t = EmbeddingMatrix::from_rows(2, &[[0.6f32, 0.8]]).unwrap();
        let pair = [SentencePair::new("a", "b")];
        let scored = score_corpus(&pair, &s, &t, &MarginConfig::default()).unwrap();
        assert!((scored[0].score - 4.0).abs() < 1e-6);

        let capped = MarginConfig {
            divisor: KDivisor::Available,
            ..Default::default()
        };
        let scored = score_corpus(&pair, &s, &t, &capped).unwrap();
        assert!((scored[0].score - 1.0).abs() < 1e-6);
    }

    #[test]
    fn same_side_neighborhood_skips_self() {
        let m = basis3();
        let cfg = MarginConfig {
            k: 1,
            neighborhood: Neighborhood::SameSide,
            ..Default::default()
        };
        // all same-side neighbors are orthogonal: denominator 0, floored
        let s = margin_scores(&m, &m, &cfg).unwrap();
        assert!(s.iter().all(|&x| x == 1.0 / MARGIN_DENOM_FLOOR));
    }

    #[test]
    fn empty_and_mismatched_corpora() {
        let e = EmbeddingMatrix::empty(3).unwrap();
        assert!(score_corpus(&[], &e, &e, &MarginConfig::default()).unwrap().is_empty());
        let m = basis3();
        let one = [SentencePair::new("a", "b")];
        assert!(matches!(
            score_corpus(&one, &m, &m, &MarginConfig::default()),
            Err(Error::LengthMismatch { .. })
        ));
    }
}

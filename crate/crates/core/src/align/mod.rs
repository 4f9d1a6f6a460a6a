//! Monotonic sentence alignment of a document pair from sentence
//! embeddings.
//!
//! An alignment is a sequence of links `(src block, tgt block)` that covers
//! every sentence on both sides exactly once, in order. Each side of a link
//! is a contiguous block of up to `max_block` sentences, or empty for a
//! skipped (null) sentence run.
//!
//! Costs:
//!
//! ```text
//! substitution (m,n >= 1):  (1 - cos(mean(src block), mean(tgt block))) * (m + n) / (2 * baseline)
//! null (m,0) or (0,n):      skip_penalty * (m + n)
//! ```
//!
//! where `baseline` is the mean `1 - cos` over randomly drawn cross-document
//! sentence pairs, floored at `1e-3`. Among equal-cost alignments the finer
//! one (more links) wins, then the lexicographically smaller link sequence.

mod coarse;
mod dp;
mod format;
mod oracle;

pub use coarse::{align_coarse_to_fine, align_coarse_to_fine_with_stats, downsample};
pub use dp::align_full_dp;
pub use format::{format_alignment, parse_alignments, write_similarity_tsv};
pub use oracle::{brute_force_align, ORACLE_MAX_SENTENCES};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embed::{block_mean, norm, EmbeddingMatrix, IndexBlock};
use crate::error::{Error, Result};

/// Floor applied to the random-pair baseline.
pub const BASELINE_FLOOR: f64 = 1e-3;

/// Relative tolerance under which two path costs count as tied.
pub(crate) const COST_TIE_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct AlignParams {
    pub max_block: usize,
    pub skip_penalty: f64,
    /// Added to a substitution link for every sentence beyond the first on
    /// each side, i.e. `block_penalty * (m + n - 2)`. Without it an m-m block
    /// costs about as much as m separate 1-1 links.
    pub block_penalty: f64,
    pub baseline_samples: usize,
    pub band_width: usize,
    pub full_dp_threshold: usize,
    /// Seed for baseline sampling.
    pub seed: u64,
}

impl Default for AlignParams {
    fn default() -> Self {
        Self {
            max_block: 3,
            skip_penalty: 1.0,
            block_penalty: 0.1,
            baseline_samples: 128,
            band_width: 10,
            full_dp_threshold: 64,
            seed: 0,
        }
    }
}

impl AlignParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_block == 0 {
            return Err(Error::param("max_block", "must be >= 1"));
        }
        if !(self.skip_penalty > 0.0 && self.skip_penalty.is_finite()) {
            return Err(Error::param("skip_penalty", "must be a positive finite number"));
        }
        if !(self.block_penalty >= 0.0 && self.block_penalty.is_finite()) {
            return Err(Error::param("block_penalty", "must be a non-negative finite number"));
        }
        if self.baseline_samples == 0 {
            return Err(Error::param("baseline_samples", "must be >= 1"));
        }
        if self.band_width == 0 {
            return Err(Error::param("band_width", "must be >= 1"));
        }
        if self.full_dp_threshold == 0 {
            return Err(Error::param("full_dp_threshold", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub src: Option<IndexBlock>,
    pub tgt: Option<IndexBlock>,
    pub cost: f64,
}

impl Link {
    /// Block sizes `(m, n)`, zero for an empty side.
    pub fn shape(&self) -> (usize, usize) {
        (
            self.src.map_or(0, |b| b.len()),
            self.tgt.map_or(0, |b| b.len()),
        )
    }

    pub fn is_null(&self) -> bool {
        self.src.is_none() || self.tgt.is_none()
    }

    pub fn transpose(&self) -> Link {
        Link {
            src: self.tgt,
            tgt: self.src,
            cost: self.cost,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Alignment {
    pub links: Vec<Link>,
}

impl Alignment {
    pub fn new(links: Vec<Link>) -> Self {
        Self { links }
    }

    pub fn total_cost(&self) -> f64 {
        self.links.iter().map(|l| l.cost).sum()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn non_null(&self) -> impl Iterator<Item = &Link> {
        self.links.iter().filter(|l| !l.is_null())
    }

    pub fn transpose(&self) -> Alignment {
        Alignment::new(self.links.iter().map(Link::transpose).collect())
    }

    /// Checks monotonicity, complete cover of `n_src` x `n_tgt` sentences and
    /// that no link is empty on both sides.
    pub fn validate(&self, n_src: usize, n_tgt: usize) -> Result<()> {
        let (mut next_src, mut next_tgt) = (0, 0);
        for (k, link) in self.links.iter().enumerate() {
            if link.src.is_none() && link.tgt.is_none() {
                return Err(Error::Domain(format!("link {k} is empty on both sides")));
            }
            if let Some(b) = link.src {
                if b.start() != next_src {
                    return Err(Error::Domain(format!(
                        "link {k}: source block starts at {}, expected {next_src}",
                        b.start()
                    )));
                }
                next_src = b.end();
            }
            if let Some(b) = link.tgt {
                if b.start() != next_tgt {
                    return Err(Error::Domain(format!(
                        "link {k}: target block starts at {}, expected {next_tgt}",
                        b.start()
                    )));
                }
                next_tgt = b.end();
            }
            if !(link.cost >= 0.0) {
                return Err(Error::Domain(format!("link {k} has cost {}", link.cost)));
            }
        }
        if next_src != n_src || next_tgt != n_tgt {
            return Err(Error::Domain(format!(
                "alignment covers {next_src}x{next_tgt} sentences, documents have {n_src}x{n_tgt}"
            )));
        }
        Ok(())
    }
}

/// Cost of aligning a block of `nsrc` source sentences to `ntgt` target
/// sentences, given the block mean vectors.
pub fn substitution_cost(
    srcb: &[f32],
    tgtb: &[f32],
    baseline: f64,
    nsrc: usize,
    ntgt: usize,
) -> f64 {
    let cos = match (norm(srcb), norm(tgtb)) {
        (a, b) if a == 0.0 || b == 0.0 => 0.0,
        (a, b) => crate::embed::cosine_with_norms(srcb, tgtb, a, b),
    };
    cost_from_cos(cos, baseline, nsrc, ntgt)
}

#[inline]
pub(crate) fn cost_from_cos(cos: f64, baseline: f64, nsrc: usize, ntgt: usize) -> f64 {
    ((1.0 - cos) * (nsrc + ntgt) as f64 / (2.0 * baseline)).max(0.0)
}

/// Mean `1 - cos` over random cross-document sentence pairs, floored at
/// [`BASELINE_FLOOR`].
///
/// Each draw `(u, v)` contributes the pair `(u*N, v*M)` and its mirror
/// `(v*N, u*M)`, and the values are summed in sorted order, so swapping the
/// two documents yields exactly the same baseline.
pub fn estimate_baseline(src: &EmbeddingMatrix, tgt: &EmbeddingMatrix, p: &AlignParams) -> f64 {
    let (n, m) = (src.count(), tgt.count());
    if n == 0 || m == 0 {
        return 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let draws = p.baseline_samples.div_ceil(2);
    let mut values = Vec::with_capacity(draws * 2);
    let one_minus_cos = |i: usize, j: usize| {
        let (a, b) = (src.row(i), tgt.row(j));
        match (norm(a), norm(b)) {
            (x, y) if x == 0.0 || y == 0.0 => 1.0,
            (x, y) => 1.0 - crate::embed::cosine_with_norms(a, b, x, y),
        }
    };
    for _ in 0..draws {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        let pick = |x: f64, len: usize| ((x * len as f64) as usize).min(len - 1);
        values.push(one_minus_cos(pick(u, n), pick(v, m)));
        values.push(one_minus_cos(pick(v, n), pick(u, m)));
    }
    values.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    mean.max(BASELINE_FLOOR)
}

/// Cosine similarity of every source row against every target row.
pub fn similarity_matrix(src: &EmbeddingMatrix, tgt: &EmbeddingMatrix) -> Result<Vec<Vec<f64>>> {
    if src.dim() != tgt.dim() {
        return Err(Error::DimMismatch {
            expected: src.dim(),
            actual: tgt.dim(),
        });
    }
    let tnorms: Vec<f64> = tgt.rows().map(norm).collect();
    Ok(src
        .rows()
        .map(|s| {
            let ns = norm(s);
            tgt.rows()
                .zip(&tnorms)
                .map(|(t, &nt)| {
                    if ns == 0.0 || nt == 0.0 {
                        0.0
                    } else {
                        crate::embed::cosine_with_norms(s, t, ns, nt)
                    }
                })
                .collect()
        })
        .collect())
}

/// Path score used for minimization: total cost, then link count.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PathScore {
    pub cost: f64,
    pub links: u32,
}

impl PathScore {
    pub const ZERO: PathScore = PathScore { cost: 0.0, links: 0 };

    pub fn then(self, cost: f64) -> PathScore {
        PathScore {
            cost: self.cost + cost,
            links: self.links + 1,
        }
    }

    /// Strictly better: lower cost beyond the tie tolerance, or a tie with
    /// more links.
    pub fn beats(&self, other: &PathScore) -> bool {
        let tol = COST_TIE_EPS * self.cost.abs().max(other.cost.abs()).max(1.0);
        if self.cost < other.cost - tol {
            return true;
        }
        (self.cost - other.cost).abs() <= tol && self.links > other.links
    }
}

/// Unit-normalized block means for every start index and block size, with
/// their norms. `vecs[m - 1][i]` is the block `i..i+m`.
pub(crate) struct BlockTable {
    vecs: Vec<Vec<Vec<f32>>>,
    norms: Vec<Vec<f64>>,
}

impl BlockTable {
    pub fn new(m: &EmbeddingMatrix, max_block: usize) -> Self {
        let mut vecs = Vec::with_capacity(max_block);
        let mut norms = Vec::with_capacity(max_block);
        for size in 1..=max_block {
            let starts = (m.count() + 1).saturating_sub(size);
            let v: Vec<Vec<f32>> = (0..starts).map(|i| block_mean(m, i, size)).collect();
            norms.push(v.iter().map(|x| norm(x)).collect());
            vecs.push(v);
        }
        Self { vecs, norms }
    }

    #[inline]
    pub fn get(&self, start: usize, size: usize) -> (&[f32], f64) {
        (&self.vecs[size - 1][start], self.norms[size - 1][start])
    }
}

/// Shared cost evaluation for the DP and the oracle.
pub(crate) struct CostModel {
    src: BlockTable,
    tgt: BlockTable,
    baseline: f64,
    skip_penalty: f64,
    block_penalty: f64,
    pub max_block: usize,
}

impl CostModel {
    pub fn new(src: &EmbeddingMatrix, tgt: &EmbeddingMatrix, p: &AlignParams) -> Self {
        Self {
            src: BlockTable::new(src, p.max_block),
            tgt: BlockTable::new(tgt, p.max_block),
            baseline: estimate_baseline(src, tgt, p),
            skip_penalty: p.skip_penalty,
            block_penalty: p.block_penalty,
            max_block: p.max_block,
        }
    }

    /// Cost of the link starting at lattice point `(i, j)` with shape `(m, n)`.
    #[inline]
    pub fn link_cost(&self, i: usize, j: usize, m: usize, n: usize) -> f64 {
        if m == 0 || n == 0 {
            return self.skip_penalty * (m + n) as f64;
        }
        let (a, na) = self.src.get(i, m);
        let (b, nb) = self.tgt.get(j, n);
        let cos = if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            crate::embed::cosine_with_norms(a, b, na, nb)
        };
        cost_from_cos(cos, self.baseline, m, n) + self.block_penalty * (m + n - 2) as f64
    }

    /// Link shapes in ascending lexicographic order.
    pub fn steps(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for m in 0..=self.max_block {
            for n in 0..=self.max_block {
                if m + n > 0 {
                    out.push((m, n));
                }
            }
        }
        out
    }
}

pub(crate) fn make_link(i: usize, j: usize, m: usize, n: usize, cost: f64) -> Link {
    Link {
        src: (m > 0).then(|| IndexBlock::new(i, m).expect("non-empty")),
        tgt: (n > 0).then(|| IndexBlock::new(j, n).expect("non-empty")),
        cost,
    }
}

pub(crate) fn check_inputs(
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    p: &AlignParams,
) -> Result<()> {
    p.validate()?;
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

    #[test]
    fn substitution_cost_examples() {
        let e0 = [1.0f32, 0.0];
        let e1 = [0.0f32, 1.0];
        assert_eq!(substitution_cost(&e0, &e0, 1.0, 1, 1), 0.0);
        assert_eq!(substitution_cost(&e0, &e1, 1.0, 1, 1), 1.0);
        assert_eq!(substitution_cost(&e0, &e1, 0.5, 2, 1), 3.0);
        // zero block vector counts as cosine 0
        assert_eq!(substitution_cost(&[0.0, 0.0], &e1, 1.0, 1, 1), 1.0);
        // anti-parallel blocks cost twice the orthogonal case
        assert_eq!(substitution_cost(&e0, &[-1.0, 0.0], 1.0, 1, 1), 2.0);
    }

    #[test]
    fn baseline_is_symmetric_and_floored() {
        let a = EmbeddingMatrix::from_rows(2, &[[1.0f32, 0.0], [0.6, 0.8], [0.0, 1.0]]).unwrap();
        let b = EmbeddingMatrix::from_rows(2, &[[0.8f32, 0.6], [1.0, 0.0]]).unwrap();
        let p = AlignParams {
            baseline_samples: 17,
            ..Default::default()
        };
        assert_eq!(estimate_baseline(&a, &b, &p), estimate_baseline(&b, &a, &p));

        let same = EmbeddingMatrix::from_rows(2, &[[1.0f32, 0.0], [1.0, 0.0]]).unwrap();
        assert_eq!(estimate_baseline(&same, &same, &p), BASELINE_FLOOR);
    }

    #[test]
    fn similarity_matrix_cases() {
        let basis = EmbeddingMatrix::from_rows(2, &[[1.0f32, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(
            similarity_matrix(&basis, &basis).unwrap(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0]]
        );
        let dup = EmbeddingMatrix::from_rows(2, &[[0.6f32, 0.8], [0.6, 0.8]]).unwrap();
        let s = similarity_matrix(&dup, &basis).unwrap();
        assert_eq!(s[0], s[1]);
        let other = EmbeddingMatrix::from_rows(4, &[[0.0f32, 0.0, 1.0, 0.0]]).unwrap();
        let wide = EmbeddingMatrix::from_rows(4, &[[1.0f32, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])
            .unwrap();
        assert_eq!(similarity_matrix(&wide, &other).unwrap(), vec![vec![0.0], vec![0.0]]);
        assert!(similarity_matrix(&basis, &other).is_err());
    }

    #[test]
    fn validate_rejects_gaps_and_double_empty() {
        let ok = Alignment::new(vec![make_link(0, 0, 1, 1, 0.0), make_link(1, 1, 1, 0, 1.0)]);
        ok.validate(2, 1).unwrap();
        assert!(ok.validate(2, 2).is_err());
        let gap = Alignment::new(vec![make_link(1, 0, 1, 1, 0.0)]);
        assert!(gap.validate(2, 1).is_err());
        let empty = Alignment::new(vec![Link {
            src: None,
            tgt: None,
            cost: 0.0,
        }]);
        assert!(empty.validate(0, 0).is_err());
    }
}

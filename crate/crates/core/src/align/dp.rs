use super::{check_inputs, make_link, Alignment, AlignParams, CostModel, PathScore};
use crate::embed::{ensure_normalized, EmbeddingMatrix};
use crate::error::{Error, Result};

/// Allowed lattice points, as an inclusive column range `lo[i]..=hi[i]` for
/// every row `i` in `0..=n_src`.
#[derive(Clone, Debug)]
pub(crate) struct Band {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

impl Band {
    pub fn full(n_src: usize, n_tgt: usize) -> Self {
        Self {
            lo: vec![0; n_src + 1],
            hi: vec![n_tgt; n_src + 1],
        }
    }

    #[inline]
    fn contains(&self, i: usize, j: usize) -> bool {
        i < self.lo.len() && j >= self.lo[i] && j <= self.hi[i]
    }
}

const NO_STEP: u8 = u8::MAX;

/// Minimum-cost monotonic alignment by exact dynamic programming over all
/// `(N+1) x (M+1)` lattice points.
pub fn align_full_dp(
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    p: &AlignParams,
) -> Result<Alignment> {
    check_inputs(src, tgt, p)?;
    let (src, tgt) = (ensure_normalized(src), ensure_normalized(tgt));
    let band = Band::full(src.count(), tgt.count());
    Ok(banded_dp(&src, &tgt, p, &band)?.0)
}

/// Runs the DP restricted to `band`. Returns the alignment and the number of
/// lattice points evaluated.
///
/// Values are computed backwards from `(N, M)` so that, walking forward from
/// `(0, 0)`, the first optimal step in ascending `(m, n)` order gives the
/// lexicographically smallest optimal link sequence.
pub(crate) fn banded_dp(
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    p: &AlignParams,
    band: &Band,
) -> Result<(Alignment, usize)> {
    let (n, m) = (src.count(), tgt.count());
    debug_assert_eq!(band.lo.len(), n + 1);
    if n == 0 && m == 0 {
        return Ok((Alignment::default(), 1));
    }
    let model = CostModel::new(src, tgt, p);
    let steps = model.steps();

    let width = |i: usize| band.hi[i] + 1 - band.lo[i];
    let mut score: Vec<Vec<Option<PathScore>>> = (0..=n).map(|i| vec![None; width(i)]).collect();
    let mut back: Vec<Vec<u8>> = (0..=n).map(|i| vec![NO_STEP; width(i)]).collect();

    if !band.contains(n, m) || !band.contains(0, 0) {
        return Err(Error::Domain("band excludes the path endpoints".into()));
    }
    score[n][m - band.lo[n]] = Some(PathScore::ZERO);
    let mut cells = 1;

    for i in (0..=n).rev() {
        for j in (band.lo[i]..=band.hi[i]).rev() {
            if i == n && j == m {
                continue;
            }
            cells += 1;
            let mut best: Option<PathScore> = None;
            let mut best_step = NO_STEP;
            for (k, &(dm, dn)) in steps.iter().enumerate() {
                let (ni, nj) = (i + dm, j + dn);
                if ni > n || nj > m || !band.contains(ni, nj) {
                    continue;
                }
                let Some(rest) = score[ni][nj - band.lo[ni]] else {
                    continue;
                };
                let cand = PathScore {
                    cost: model.link_cost(i, j, dm, dn) + rest.cost,
                    links: rest.links + 1,
                };
                if best.is_none_or(|b| cand.beats(&b)) {
                    best = Some(cand);
                    best_step = k as u8;
                }
            }
            score[i][j - band.lo[i]] = best;
            back[i][j - band.lo[i]] = best_step;
        }
    }

    let mut links = Vec::new();
    let (mut i, mut j) = (0, 0);
    while (i, j) != (n, m) {
        let k = back[i][j - band.lo[i]];
        if k == NO_STEP {
            return Err(Error::Domain(format!(
                "no path from lattice point ({i}, {j}) inside the band"
            )));
        }
        let (dm, dn) = steps[k as usize];
        links.push(make_link(i, j, dm, dn, model.link_cost(i, j, dm, dn)));
        i += dm;
        j += dn;
    }
    Ok((Alignment::new(links), cells))
}

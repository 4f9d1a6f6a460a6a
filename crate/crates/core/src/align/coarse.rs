use super::dp::{banded_dp, Band};
use super::{check_inputs, Alignment, AlignParams};
use crate::embed::{block_mean, ensure_normalized, EmbeddingMatrix};
use crate::error::Result;

/// Halves the row count by averaging adjacent row pairs and re-normalizing.
/// An odd trailing row passes through unchanged.
pub fn downsample(m: &EmbeddingMatrix) -> EmbeddingMatrix {
    let rows: Vec<Vec<f32>> = (0..m.count())
        .step_by(2)
        .map(|i| block_mean(m, i, (m.count() - i).min(2)))
        .collect();
    EmbeddingMatrix::from_rows(m.dim(), &rows)
        .expect("rows share the source dimension")
        .assume_normalized()
}

/// Approximate alignment: recursively aligns 2x-downsampled documents, then
/// solves the DP only inside a band around the projected coarse path.
/// Falls back to the full DP once either document has at most
/// `full_dp_threshold` sentences.
pub fn align_coarse_to_fine(
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    p: &AlignParams,
) -> Result<Alignment> {
    Ok(align_coarse_to_fine_with_stats(src, tgt, p)?.0)
}

/// Like [`align_coarse_to_fine`], also returning the number of DP lattice
/// points evaluated across all recursion levels.
pub fn align_coarse_to_fine_with_stats(
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    p: &AlignParams,
) -> Result<(Alignment, usize)> {
    check_inputs(src, tgt, p)?;
    let (src, tgt) = (ensure_normalized(src), ensure_normalized(tgt));
    recurse(&src, &tgt, p)
}

fn recurse(src: &EmbeddingMatrix, tgt: &EmbeddingMatrix, p: &AlignParams) -> Result<(Alignment, usize)> {
    let (n, m) = (src.count(), tgt.count());
    if n.min(m) <= p.full_dp_threshold {
        return banded_dp(src, tgt, p, &Band::full(n, m));
    }
    let (coarse, coarse_cells) = recurse(&downsample(src), &downsample(tgt), p)?;
    let band = project_band(&coarse, n, m, p.band_width);
    let (fine, cells) = banded_dp(src, tgt, p, &band)?;
    Ok((fine, cells + coarse_cells))
}

/// Maps a coarse path onto the fine lattice and widens it by `width` in
/// both directions.
fn project_band(coarse: &Alignment, n: usize, m: usize, width: usize) -> Band {
    // Column range touched by the projected path in every fine row.
    let mut path_lo = vec![usize::MAX; n + 1];
    let mut path_hi = vec![0usize; n + 1];
    let mut mark = |i0: usize, i1: usize, j0: usize, j1: usize| {
        for i in i0..=i1 {
            path_lo[i] = path_lo[i].min(j0);
            path_hi[i] = path_hi[i].max(j1);
        }
    };
    let up_src = |a: usize| (2 * a).min(n);
    let up_tgt = |b: usize| (2 * b).min(m);
    let (mut a, mut b) = (0usize, 0usize);
    mark(0, 0, 0, 0);
    for link in &coarse.links {
        let (dm, dn) = link.shape();
        mark(up_src(a), up_src(a + dm), up_tgt(b), up_tgt(b + dn));
        a += dm;
        b += dn;
    }
    mark(n, n, m, m);

    let mut lo = vec![usize::MAX; n + 1];
    let mut hi = vec![0usize; n + 1];
    for i in 0..=n {
        if path_lo[i] == usize::MAX {
            continue;
        }
        let (l, h) = (path_lo[i].saturating_sub(width), (path_hi[i] + width).min(m));
        for r in i.saturating_sub(width)..=(i + width).min(n) {
            lo[r] = lo[r].min(l);
            hi[r] = hi[r].max(h);
        }
    }
    // Make both bounds non-decreasing so consecutive rows overlap.
    for i in (0..n).rev() {
        lo[i] = lo[i].min(lo[i + 1]);
    }
    for i in 1..=n {
        hi[i] = hi[i].max(hi[i - 1]);
    }
    lo[0] = 0;
    hi[n] = m;
    Band { lo, hi }
}

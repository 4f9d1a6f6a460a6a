use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};

use super::model::{ProjectionModel, MIN_PROJECTED_NORM};
use super::negatives::ContrastiveBatch;

/// Max-shifted log-sum-exp. `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Loss for a single anchor: `-(pos - LSE(negs))`, with `pos` joining the
/// LSE when `include_positive` is set.
pub fn mnr_loss(pos: f64, negs: &[f64], include_positive: bool) -> Result<f64> {
    if negs.is_empty() && !include_positive {
        return Err(Error::param("negatives", "empty negative list"));
    }
    let lse = if include_positive {
        let mut all = Vec::with_capacity(negs.len() + 1);
        all.push(pos);
        all.extend_from_slice(negs);
        log_sum_exp(&all)
    } else {
        log_sum_exp(negs)
    };
    Ok(lse - pos)
}

struct Projected {
    z_norm: f64,
    y: Vec<f64>,
}

fn project_row(model: &ProjectionModel, m: &EmbeddingMatrix, i: usize, side: &'static str) -> Result<Projected> {
    let z = model.project_raw(m.row(i));
    let n = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n >= MIN_PROJECTED_NORM && n.is_finite()) {
        return Err(Error::DegenerateProjection { side, row: i });
    }
    Ok(Projected {
        z_norm: n,
        y: z.iter().map(|v| v / n).collect(),
    })
}

fn check_pair(model: &ProjectionModel, src: &EmbeddingMatrix, tgt: &EmbeddingMatrix) -> Result<()> {
    if src.count() != tgt.count() {
        return Err(Error::LengthMismatch {
            what: "source vs target rows",
            left: src.count(),
            right: tgt.count(),
        });
    }
    for m in [src, tgt] {
        if m.dim() != model.in_dim() {
            return Err(Error::DimMismatch {
                expected: model.in_dim(),
                actual: m.dim(),
            });
        }
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Forward {
    src: BTreeMap<usize, Projected>,
    tgt: BTreeMap<usize, Projected>,
}

fn forward(
    model: &ProjectionModel,
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    batch: &ContrastiveBatch,
) -> Result<Forward> {
    check_pair(model, src, tgt)?;
    if batch.items.is_empty() {
        return Err(Error::param("batch", "empty batch"));
    }
    let mut fw = Forward {
        src: BTreeMap::new(),
        tgt: BTreeMap::new(),
    };
    for it in &batch.items {
        for &j in std::iter::once(&it.anchor).chain(&it.negatives) {
            if j >= tgt.count() {
                return Err(Error::OutOfBounds {
                    index: j,
                    len: tgt.count(),
                });
            }
            if let Entry::Vacant(e) = fw.tgt.entry(j) {
                e.insert(project_row(model, tgt, j, "target")?);
            }
        }
        if let Entry::Vacant(e) = fw.src.entry(it.anchor) {
            e.insert(project_row(model, src, it.anchor, "source")?);
        }
    }
    Ok(fw)
}

fn similarities(model: &ProjectionModel, fw: &Forward, anchor: usize, negatives: &[usize]) -> (f64, Vec<f64>) {
    let ys = &fw.src[&anchor].y;
    let pos = model.scale * dot(ys, &fw.tgt[&anchor].y);
    let negs = negatives
        .iter()
        .map(|j| model.scale * dot(ys, &fw.tgt[j].y))
        .collect();
    (pos, negs)
}

/// Mean per-anchor loss over a batch.
pub fn batch_loss(
    model: &ProjectionModel,
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    batch: &ContrastiveBatch,
) -> Result<f64> {
    let fw = forward(model, src, tgt, batch)?;
    let mut total = 0.0;
    for it in &batch.items {
        let (pos, negs) = similarities(model, &fw, it.anchor, &it.negatives);
        total += mnr_loss(pos, &negs, model.include_positive)?;
    }
    Ok(total / batch.items.len() as f64)
}

/// Batch loss and its gradient with respect to the projection weights
/// (row-major, same layout as [`ProjectionModel::weight`]).
pub fn batch_loss_and_gradient(
    model: &ProjectionModel,
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    batch: &ContrastiveBatch,
) -> Result<(f64, Vec<f64>)> {
    let fw = forward(model, src, tgt, batch)?;
    let k = batch.items.len() as f64;
    let out = model.out_dim();
    let mut gy_src: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut gy_tgt: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut total = 0.0;

    for it in &batch.items {
        let (pos, negs) = similarities(model, &fw, it.anchor, &it.negatives);
        total += mnr_loss(pos, &negs, model.include_positive)?;

        let lse = if model.include_positive {
            log_sum_exp(&[&[pos][..], &negs].concat())
        } else {
            log_sum_exp(&negs)
        };
        // dL/dsim, already divided by K
        let p_pos = if model.include_positive {
            (pos - lse).exp()
        } else {
            0.0
        };
        let mut coeffs = vec![(it.anchor, -(1.0 - p_pos) / k)];
        coeffs.extend(
            it.negatives
                .iter()
                .zip(&negs)
                .map(|(&j, &s)| (j, (s - lse).exp() / k)),
        );

        let ys = &fw.src[&it.anchor].y;
        for (j, c) in coeffs {
            let yt = &fw.tgt[&j].y;
            let c = c * model.scale;
            let gs = gy_src.entry(it.anchor).or_insert_with(|| vec![0.0; out]);
            for (g, v) in gs.iter_mut().zip(yt) {
                *g += c * v;
            }
            let gt = gy_tgt.entry(j).or_insert_with(|| vec![0.0; out]);
            for (g, v) in gt.iter_mut().zip(ys) {
                *g += c * v;
            }
        }
    }

    let mut grad = vec![0.0; model.weight().len()];
    for (grads, proj, m) in [(&gy_src, &fw.src, src), (&gy_tgt, &fw.tgt, tgt)] {
        for (i, gy) in grads {
            let p = &proj[i];
            // through y = z / |z|
            let along = dot(&p.y, gy);
            let x = m.row(*i);
            for (r, (g, y)) in gy.iter().zip(&p.y).enumerate() {
                let gz = (g - y * along) / p.z_norm;
                if gz == 0.0 {
                    continue;
                }
                let row = &mut grad[r * model.in_dim()..(r + 1) * model.in_dim()];
                for (w, &xv) in row.iter_mut().zip(x) {
                    *w += gz * f64::from(xv);
                }
            }
        }
    }
    Ok((total / k, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mnr::negatives::ContrastiveItem;

    #[test]
    fn spot_value() {
        let l = mnr_loss(0.9, &[0.1, -0.2], false).unwrap();
        assert!((l - -0.2456447555).abs() < 1e-9, "{l}");
    }

    #[test]
    fn including_positive_makes_loss_nonnegative() {
        let l = mnr_loss(0.9, &[0.1, -0.2], true).unwrap();
        let direct = ((0.9f64).exp() + (0.1f64).exp() + (-0.2f64).exp()).ln() - 0.9;
        assert!((l - direct).abs() < 1e-12);
        assert!(l > 0.0);
        assert!(mnr_loss(1.0, &[], true).unwrap().abs() < 1e-15);
        assert!(mnr_loss(1.0, &[], false).is_err());
    }

    #[test]
    fn lse_is_stable_for_large_inputs() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-9);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn batch_loss_matches_gradient_path() {
        let src = EmbeddingMatrix::from_rows(2, &[[1.0f32, 0.0], [0.0, 1.0], [0.6, 0.8]]).unwrap();
        let tgt = EmbeddingMatrix::from_rows(2, &[[0.9f32, 0.1], [0.2, 0.9], [0.5, 0.5]]).unwrap();
        let model = ProjectionModel::random(3, 2, 4).unwrap().with_scale(5.0);
        let batch = ContrastiveBatch {
            items: vec![
                ContrastiveItem {
                    anchor: 0,
                    negatives: vec![1, 2],
                },
                ContrastiveItem {
                    anchor: 2,
                    negatives: vec![1],
                },
            ],
        };
        let a = batch_loss(&model, &src, &tgt, &batch).unwrap();
        let (b, g) = batch_loss_and_gradient(&model, &src, &tgt, &batch).unwrap();
        assert_eq!(a, b);
        assert_eq!(g.len(), 6);
        assert!(g.iter().any(|v| *v != 0.0));
    }
}

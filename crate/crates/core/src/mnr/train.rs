use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};

use super::loss::batch_loss_and_gradient;
use super::model::ProjectionModel;
use super::negatives::{build_negative_sets_for_epoch, TrainConfig};

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: ProjectionModel,
    /// Mean per-anchor loss of each epoch, measured before each update.
    pub loss_trace: Vec<f64>,
}

/// SGD with momentum over fixed, in-order batches. Row `i` of `src` and
/// `tgt` form the i-th positive pair.
pub fn train_projection(
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    cfg: &TrainConfig,
    init: ProjectionModel,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if src.count() != tgt.count() {
        return Err(Error::LengthMismatch {
            what: "source vs target rows",
            left: src.count(),
            right: tgt.count(),
        });
    }
    let mut model = init;
    let mut velocity = vec![0.0; model.weight().len()];
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let batches = build_negative_sets_for_epoch(src.count(), cfg, epoch as u64)?;
        let mut sum = 0.0;
        let mut items = 0usize;
        for batch in &batches {
            let (loss, grad) = batch_loss_and_gradient(&model, src, tgt, batch)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, loss });
            }
            sum += loss * batch.items.len() as f64;
            items += batch.items.len();
            for ((w, v), g) in model.weight_mut().iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v + g;
                *w -= cfg.lr * *v;
            }
        }
        if model.weight().iter().any(|w| !w.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                loss: f64::NAN,
            });
        }
        trace.push(sum / items as f64);
    }
    Ok(TrainOutcome {
        model,
        loss_trace: trace,
    })
}

/// `epoch<TAB>mean_loss` lines, epochs counted from 1.
pub fn format_loss_trace(trace: &[f64]) -> String {
    let mut out = String::from("epoch\tmean_loss\n");
    for (e, l) in trace.iter().enumerate() {
        let _ = writeln!(out, "{}\t{:.9}", e + 1, l);
    }
    out
}

pub fn write_loss_trace(trace: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_loss_trace(trace)).map_err(|e| Error::io(path, e))
}

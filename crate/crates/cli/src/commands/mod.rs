pub mod align;
pub mod eval;
pub mod gen;
pub mod heatmap;
pub mod preprocess;
pub mod score;
pub mod subsample;
pub mod train;

use std::path::Path;

use anyhow::{Context, Result};
use btx::bitext::Side;
use btx::embed::{load_embeddings, EmbeddingMatrix};
use btx::mnr::{forward_project, load_checkpoint};

pub fn side_name(s: Side) -> &'static str {
    match s {
        Side::Src => "src",
        Side::Tgt => "tgt",
    }
}

pub fn load_emb(path: &Path) -> Result<EmbeddingMatrix> {
    load_embeddings(path).with_context(|| format!("loading embeddings {}", path.display()))
}

/// Applies the projection checkpoint at `model`, if any, to both sides.
pub fn maybe_project(
    model: Option<&Path>,
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
) -> Result<(EmbeddingMatrix, EmbeddingMatrix)> {
    match model {
        None => Ok((src, tgt)),
        Some(p) => {
            let m = load_checkpoint(p).with_context(|| format!("loading model {}", p.display()))?;
            Ok((forward_project(&src, &m)?, forward_project(&tgt, &m)?))
        }
    }
}

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"BTXPROJ1";
const CHECKPOINT_HEADER: usize = 8 + 4 + 4 + 4 + 1;

/// Projected rows with a norm below this (or non-finite) are rejected.
pub const MIN_PROJECTED_NORM: f64 = 1e-12;

/// Linear projection head applied to frozen base embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionModel {
    out_dim: usize,
    in_dim: usize,
    /// Row-major `out_dim x in_dim`.
    weight: Vec<f64>,
    /// Multiplier on cosine similarities inside the loss.
    pub scale: f64,
    /// Whether the positive similarity joins the log-sum-exp.
    pub include_positive: bool,
}

impl ProjectionModel {
    pub fn from_weights(out_dim: usize, in_dim: usize, weight: Vec<f64>) -> Result<Self> {
        if out_dim == 0 || in_dim == 0 {
            return Err(Error::param("dims", "projection dimensions must be positive"));
        }
        if weight.len() != out_dim * in_dim {
            return Err(Error::LengthMismatch {
                what: "weight length vs out_dim*in_dim",
                left: weight.len(),
                right: out_dim * in_dim,
            });
        }
        if weight.iter().any(|w| !w.is_finite()) {
            return Err(Error::param("weight", "entries must be finite"));
        }
        Ok(Self {
            out_dim,
            in_dim,
            weight,
            scale: 1.0,
            include_positive: false,
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut w = vec![0.0; dim * dim];
        for i in 0..dim {
            w[i * dim + i] = 1.0;
        }
        Self::from_weights(dim, dim, w)
    }

    /// Gaussian init with variance `1 / in_dim`.
    pub fn random(out_dim: usize, in_dim: usize, seed: u64) -> Result<Self> {
        if in_dim == 0 {
            return Err(Error::param("in_dim", "must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, (1.0 / in_dim as f64).sqrt()).expect("valid std");
        let w = (0..out_dim * in_dim).map(|_| normal.sample(&mut rng)).collect();
        Self::from_weights(out_dim, in_dim, w)
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_include_positive(mut self, include: bool) -> Self {
        self.include_positive = include;
        self
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub(crate) fn weight_mut(&mut self) -> &mut [f64] {
        &mut self.weight
    }

    /// `W x` in 64-bit.
    pub fn project_raw(&self, x: &[f32]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim);
        self.weight
            .chunks_exact(self.in_dim)
            .map(|row| {
                row.iter()
                    .zip(x)
                    .map(|(w, &v)| w * f64::from(v))
                    .sum::<f64>()
            })
            .collect()
    }
}

/// Maps every row through the projection and L2-normalizes the result.
pub fn forward_project(base: &EmbeddingMatrix, model: &ProjectionModel) -> Result<EmbeddingMatrix> {
    if base.dim() != model.in_dim() {
        return Err(Error::DimMismatch {
            expected: model.in_dim(),
            actual: base.dim(),
        });
    }
    let mut data = Vec::with_capacity(base.count() * model.out_dim());
    for (i, row) in base.rows().enumerate() {
        let z = model.project_raw(row);
        let n = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(n >= MIN_PROJECTED_NORM && n.is_finite()) {
            return Err(Error::DegenerateProjection {
                side: "input",
                row: i,
            });
        }
        data.extend(z.iter().map(|v| (v / n) as f32));
    }
    Ok(EmbeddingMatrix::new(base.count(), model.out_dim(), data)?.assume_normalized())
}

pub fn encode_checkpoint(model: &ProjectionModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(CHECKPOINT_HEADER + model.weight.len() * 4);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(model.out_dim as u32).to_le_bytes());
    out.extend_from_slice(&(model.in_dim as u32).to_le_bytes());
    out.extend_from_slice(&(model.scale as f32).to_le_bytes());
    out.push(u8::from(model.include_positive));
    for w in &model.weight {
        out.extend_from_slice(&(*w as f32).to_le_bytes());
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ProjectionModel> {
    if bytes.len() < CHECKPOINT_HEADER {
        return Err(Error::Format {
            field: "header",
            detail: format!("need {CHECKPOINT_HEADER} bytes, found {}", bytes.len()),
        });
    }
    if &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(Error::Format {
            field: "magic",
            detail: "not a projection checkpoint".into(),
        });
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (out_dim, in_dim) = (u32_at(8), u32_at(12));
    let scale = f32::from_le_bytes(bytes[16..20].try_into().unwrap());
    let include_positive = match bytes[20] {
        0 => false,
        1 => true,
        other => {
            return Err(Error::Format {
                field: "include_positive",
                detail: format!("flag byte {other}"),
            })
        }
    };
    if out_dim == 0 || in_dim == 0 {
        return Err(Error::Format {
            field: "dims",
            detail: format!("{out_dim}x{in_dim}"),
        });
    }
    let payload = &bytes[CHECKPOINT_HEADER..];
    if payload.len() != out_dim * in_dim * 4 {
        return Err(Error::Format {
            field: "payload",
            detail: format!("expected {} bytes, found {}", out_dim * in_dim * 4, payload.len()),
        });
    }
    let weight = payload
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
        .collect();
    Ok(ProjectionModel::from_weights(out_dim, in_dim, weight)
        .map_err(|e| Error::Format {
            field: "payload",
            detail: e.to_string(),
        })?
        .with_scale(f64::from(scale))
        .with_include_positive(include_positive))
}

pub fn save_checkpoint(model: &ProjectionModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_checkpoint(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ProjectionModel> {
    let path = path.as_ref();
    decode_checkpoint(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::l2_normalize;

    fn base() -> EmbeddingMatrix {
        l2_normalize(
            &EmbeddingMatrix::from_rows(3, &[[0.2f32, -0.5, 0.9], [1.0, 1.0, 0.0], [0.0, 0.3, -0.1]])
                .unwrap(),
        )
        .0
    }

    #[test]
    fn identity_and_scaled_identity_preserve_rows() {
        let b = base();
        let id = forward_project(&b, &ProjectionModel::identity(3).unwrap()).unwrap();
        let two = ProjectionModel::from_weights(3, 3, vec![2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 2.0])
            .unwrap();
        let scaled = forward_project(&b, &two).unwrap();
        for ((x, y), z) in b.data().iter().zip(id.data()).zip(scaled.data()) {
            assert!((x - y).abs() < 1e-6);
            assert!((x - z).abs() < 1e-6);
        }
    }

    #[test]
    fn one_dimensional_output_is_sign() {
        let m = ProjectionModel::random(1, 3, 9).unwrap();
        let out = forward_project(&base(), &m).unwrap();
        assert!(out.data().iter().all(|v| v.abs() == 1.0));
    }

    #[test]
    fn degenerate_rows_are_named() {
        let m = ProjectionModel::from_weights(1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        let b = EmbeddingMatrix::from_rows(3, &[[1.0f32, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        match forward_project(&b, &m) {
            Err(Error::DegenerateProjection { row, .. }) => assert_eq!(row, 1),
            other => panic!("unexpected {other:?}"),
        }
        let wide = EmbeddingMatrix::from_rows(2, &[[1.0f32, 0.0]]).unwrap();
        assert!(matches!(forward_project(&wide, &m), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = ProjectionModel::random(2, 3, 1)
            .unwrap()
            .with_scale(20.0)
            .with_include_positive(true);
        let bytes = encode_checkpoint(&m);
        assert_eq!(bytes.len(), 21 + 24);
        let back = decode_checkpoint(&bytes).unwrap();
        assert_eq!((back.out_dim(), back.in_dim()), (2, 3));
        assert_eq!(back.scale, 20.0);
        assert!(back.include_positive);
        for (a, b) in back.weight().iter().zip(m.weight()) {
            assert_eq!(*a, f64::from(*b as f32));
        }
        assert_eq!(encode_checkpoint(&back), bytes);

        let mut bad = bytes.clone();
        bad[0] = b'x';
        assert!(matches!(decode_checkpoint(&bad), Err(Error::Format { field: "magic", .. })));
        assert!(matches!(
            decode_checkpoint(&bytes[..30]),
            Err(Error::Format { field: "payload", .. })
        ));
    }
}

//! Dense sentence-embedding matrices and the vector primitives shared by
//! the aligner, the margin filter and the trainer.
//!
//! Values are stored as `f32`; every reduction (dot products, norms, means)
//! accumulates in `f64` in ascending element order and is rounded only when
//! written back into a matrix. Code that must agree bit-for-bit (blocked vs.
//! naive kNN, full vs. banded DP) relies on that fixed order.
//!
//! # File layout
//!
//! ```text
//! offset  size        field
//! 0       8           magic  b"BTXEMB1\n"
//! 8       4           count  u32 LE
//! 12      4           dim    u32 LE
//! 16      count*dim*4 f32 LE, row-major
//! ```

use std::borrow::Cow;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const EMBEDDING_MAGIC: &[u8; 8] = b"BTXEMB1\n";
const HEADER_LEN: usize = 16;

/// Row-major matrix of sentence embeddings, one row per sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    count: usize,
    dim: usize,
    data: Vec<f32>,
    normalized: bool,
}

impl EmbeddingMatrix {
    pub fn new(count: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        if data.len() != count * dim {
            return Err(Error::LengthMismatch {
                what: "data length vs count*dim",
                left: data.len(),
                right: count * dim,
            });
        }
        Ok(Self {
            count,
            dim,
            data,
            normalized: false,
        })
    }

    /// An empty matrix with `dim` columns.
    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(0, dim, Vec::new())
    }

    pub fn from_rows<R: AsRef<[f32]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), dim, data)
    }

    pub fn from_rows_f64<R: AsRef<[f64]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let rows32: Vec<Vec<f32>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&x| x as f32).collect())
            .collect();
        Self::from_rows(dim, &rows32)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Row `i`. Panics when `i >= count`.
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// New matrix made of the listed rows, in the listed order. The
    /// normalization flag carries over.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.count {
                return Err(Error::OutOfBounds {
                    index: i,
                    len: self.count,
                });
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(Self {
            count: indices.len(),
            dim: self.dim,
            data,
            normalized: self.normalized,
        })
    }

    /// Marks an already unit-norm matrix as normalized without touching data.
    pub(crate) fn assume_normalized(mut self) -> Self {
        self.normalized = true;
        self
    }
}

/// Borrow `m` if it is already normalized, otherwise normalize a copy.
pub(crate) fn ensure_normalized(m: &EmbeddingMatrix) -> Cow<'_, EmbeddingMatrix> {
    if m.is_normalized() {
        Cow::Borrowed(m)
    } else {
        Cow::Owned(l2_normalize(m).0)
    }
}

pub fn encode_embeddings(m: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + m.data.len() * 4);
    out.extend_from_slice(EMBEDDING_MAGIC);
    out.extend_from_slice(&(m.count as u32).to_le_bytes());
    out.extend_from_slice(&(m.dim as u32).to_le_bytes());
    for v in &m.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format {
            field: "header",
            detail: format!("need {HEADER_LEN} bytes, file has {}", bytes.len()),
        });
    }
    if &bytes[..8] != EMBEDDING_MAGIC {
        return Err(Error::Format {
            field: "magic",
            detail: format!("expected {:?}, found {:?}", EMBEDDING_MAGIC, &bytes[..8]),
        });
    }
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if dim == 0 {
        return Err(Error::Format {
            field: "dim",
            detail: "dimension must be positive".into(),
        });
    }
    let payload = &bytes[HEADER_LEN..];
    let expected = count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format {
            field: "count",
            detail: "count*dim overflows".into(),
        })?;
    if payload.len() != expected {
        return Err(Error::Format {
            field: "payload",
            detail: format!("expected {expected} bytes, found {}", payload.len()),
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    EmbeddingMatrix::new(count, dim, data)
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_embeddings(&bytes)
}

pub fn save_embeddings(m: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_embeddings(m)).map_err(|e| Error::io(path, e))
}

#[inline]
pub fn dot(u: &[f32], v: &[f32]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let mut acc = 0.0f64;
    for (a, b) in u.iter().zip(v) {
        acc += f64::from(*a) * f64::from(*b);
    }
    acc
}

#[inline]
pub fn norm(u: &[f32]) -> f64 {
    dot(u, u).sqrt()
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Domain("cosine of a zero vector".into()));
    }
    Ok(cosine_with_norms(u, v, nu, nv))
}

/// Cosine given precomputed norms; same arithmetic as [`cosine`].
#[inline]
pub(crate) fn cosine_with_norms(u: &[f32], v: &[f32], nu: f64, nv: f64) -> f64 {
    (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0)
}

/// Scales every nonzero row to unit length. Returns the normalized matrix
/// and the number of all-zero rows, which are left untouched.
pub fn l2_normalize(m: &EmbeddingMatrix) -> (EmbeddingMatrix, usize) {
    let mut data = m.data.clone();
    let mut zero_rows = 0;
    for row in data.chunks_exact_mut(m.dim) {
        let n = norm(row);
        if n == 0.0 {
            zero_rows += 1;
            continue;
        }
        for x in row.iter_mut() {
            *x = (f64::from(*x) / n) as f32;
        }
    }
    let out = EmbeddingMatrix {
        count: m.count,
        dim: m.dim,
        data,
        normalized: true,
    };
    (out, zero_rows)
}

/// A contiguous, non-empty run of sentence indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexBlock {
    start: usize,
    len: usize,
}

impl IndexBlock {
    pub fn new(start: usize, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::param("len", "index block must be non-empty"));
        }
        Ok(Self { start, len })
    }

    pub fn single(index: usize) -> Self {
        Self {
            start: index,
            len: 1,
        }
    }

    /// Builds a block from explicit indices; they must be strictly
    /// increasing by one.
    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        let (&first, rest) = indices
            .split_first()
            .ok_or_else(|| Error::param("indices", "index block must be non-empty"))?;
        let mut prev = first;
        for &i in rest {
            if i != prev + 1 {
                return Err(Error::param(
                    "indices",
                    format!("not contiguous: {prev} followed by {i}"),
                ));
            }
            prev = i;
        }
        Ok(Self {
            start: first,
            len: indices.len(),
        })
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// One past the last index.
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.end()
    }
}

/// Mean of the block's rows, re-normalized to unit length. A zero mean
/// yields the zero vector.
pub fn block_embed(m: &EmbeddingMatrix, b: IndexBlock) -> Result<Vec<f32>> {
    if b.end() > m.count() {
        return Err(Error::OutOfBounds {
            index: b.end() - 1,
            len: m.count(),
        });
    }
    Ok(block_mean(m, b.start(), b.len()))
}

pub(crate) fn block_mean(m: &EmbeddingMatrix, start: usize, len: usize) -> Vec<f32> {
    if len == 1 {
        return m.row(start).to_vec();
    }
    let mut acc = vec![0.0f64; m.dim()];
    for i in start..start + len {
        for (a, &x) in acc.iter_mut().zip(m.row(i)) {
            *a += f64::from(x);
        }
    }
    let inv = 1.0 / len as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    let n = acc.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n == 0.0 {
        return vec![0.0; m.dim()];
    }
    acc.iter().map(|a| (a / n) as f32).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f32]]) -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(rows[0].len(), rows).unwrap()
    }

    #[test]
    fn decode_two_by_three() {
        let mut bytes = EMBEDDING_MAGIC.to_vec();
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&3u32.to_le_bytes());
        for v in [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let got = decode_embeddings(&bytes).unwrap();
        assert_eq!((got.count(), got.dim()), (2, 3));
        assert_eq!(got.row(1), &[4.0, 5.0, 6.0]);
        assert!(!got.is_normalized());
    }

    #[test]
    fn decode_rejects_bad_magic() {
        let mut bytes = encode_embeddings(&m(&[&[1.0]]));
        bytes[3] = b'X';
        match decode_embeddings(&bytes) {
            Err(Error::Format { field, .. }) => assert_eq!(field, "magic"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decode_rejects_truncation_and_zero_dim() {
        let mut bytes = encode_embeddings(&m(&[&[1.0, 2.0]]));
        bytes.pop();
        assert!(matches!(
            decode_embeddings(&bytes),
            Err(Error::Format { field: "payload", .. })
        ));
        let mut zero_dim = EMBEDDING_MAGIC.to_vec();
        zero_dim.extend_from_slice(&0u32.to_le_bytes());
        zero_dim.extend_from_slice(&0u32.to_le_bytes());
        assert!(matches!(
            decode_embeddings(&zero_dim),
            Err(Error::Format { field: "dim", .. })
        ));
        assert!(matches!(
            decode_embeddings(&bytes[..10]),
            Err(Error::Format { field: "header", .. })
        ));
    }

    #[test]
    fn encode_small_cases() {
        let empty = EmbeddingMatrix::empty(7).unwrap();
        let bytes = encode_embeddings(&empty);
        assert_eq!(bytes.len(), 16);
        assert_eq!(decode_embeddings(&bytes).unwrap().count(), 0);

        let one = m(&[&[0.5]]);
        let bytes = encode_embeddings(&one);
        assert_eq!(bytes.len(), 20);
        assert_eq!(&bytes[16..], &0.5f32.to_le_bytes());
    }

    #[test]
    fn file_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.emb");
        let b = dir.path().join("b.emb");
        let orig = m(&[&[0.1, -2.5, f32::MIN_POSITIVE], &[3.0, 1e-30, -0.0]]);
        save_embeddings(&orig, &a).unwrap();
        let loaded = load_embeddings(&a).unwrap();
        assert_eq!(loaded, orig);
        save_embeddings(&loaded, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn normalize_cases() {
        let (n, zeros) = l2_normalize(&m(&[&[3.0, 4.0], &[0.0, 0.0]]));
        assert_eq!(zeros, 1);
        assert!(n.is_normalized());
        assert!((n.row(0)[0] - 0.6).abs() < 1e-7);
        assert!((n.row(0)[1] - 0.8).abs() < 1e-7);
        assert_eq!(n.row(1), &[0.0, 0.0]);

        let (again, _) = l2_normalize(&n);
        for (a, b) in again.data().iter().zip(n.data()) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn cosine_cases() {
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::Domain(_))));
        assert!(matches!(cosine(&[1.0], &[1.0, 0.0]), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn block_embed_cases() {
        let mat = m(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]]).assume_normalized();
        assert_eq!(block_embed(&mat, IndexBlock::single(1)).unwrap(), vec![0.0, 1.0]);
        assert_eq!(
            block_embed(&mat, IndexBlock::new(1, 2).unwrap()).unwrap(),
            vec![0.0, 1.0]
        );
        let mixed = block_embed(&mat, IndexBlock::new(0, 2).unwrap()).unwrap();
        for v in mixed {
            assert!((v - std::f32::consts::FRAC_1_SQRT_2).abs() < 1e-6);
        }
        assert!(matches!(
            block_embed(&mat, IndexBlock::new(2, 2).unwrap()),
            Err(Error::OutOfBounds { .. })
        ));
        let opposite = m(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        assert_eq!(
            block_embed(&opposite, IndexBlock::new(0, 2).unwrap()).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn index_block_contiguity() {
        assert_eq!(
            IndexBlock::from_indices(&[4, 5, 6]).unwrap(),
            IndexBlock::new(4, 3).unwrap()
        );
        assert!(IndexBlock::from_indices(&[1, 3]).is_err());
        assert!(IndexBlock::from_indices(&[]).is_err());
        assert!(IndexBlock::new(0, 0).is_err());
    }
}

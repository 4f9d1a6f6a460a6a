use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::align::{Alignment, Link};
use crate::bitext::SentencePair;
use crate::embed::{EmbeddingMatrix, IndexBlock};
use crate::error::{Error, Result};

use super::text::gen_sentences;
use crate::bitext::Side;

const MAX_TRIES: usize = 200;
/// Slack kept between planted cosines and the requested bounds so that rounding
/// to `f32` cannot cross them.
const SLACK: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    /// Number of gold links (1-1 pairs, 2-1 merges and single-sentence inserts).
    pub n_pairs: usize,
    pub dim: usize,
    pub clean_cos_min: f64,
    pub noise_cos_max: f64,
    pub insert_rate: f64,
    pub merge_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_pairs: 100,
            dim: 256,
            clean_cos_min: 0.9,
            noise_cos_max: 0.3,
            insert_rate: 0.0,
            merge_rate: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::param("dim", "must be >= 2"));
        }
        if !(self.clean_cos_min > self.noise_cos_max) {
            return Err(Error::param("clean_cos_min", "must exceed noise_cos_max"));
        }
        if !(self.clean_cos_min < 1.0 && self.noise_cos_max > -1.0) {
            return Err(Error::param("cosine bounds", "must lie strictly inside (-1, 1)"));
        }
        for (name, r) in [("insert_rate", self.insert_rate), ("merge_rate", self.merge_rate)] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::param(name, "must lie in [0, 1)"));
            }
        }
        if self.insert_rate + self.merge_rate >= 1.0 {
            return Err(Error::param("insert_rate + merge_rate", "must be < 1"));
        }
        Ok(())
    }
}

/// One synthetic document pair.
#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub src_sentences: Vec<String>,
    pub tgt_sentences: Vec<String>,
    pub gold: Alignment,
    pub src: EmbeddingMatrix,
    pub tgt: EmbeddingMatrix,
    /// Per gold link: `true` for a translation, `false` for an insert.
    pub labels: Vec<bool>,
}

/// Parallel sentence pairs with clean/noise labels.
#[derive(Clone, Debug)]
pub struct PairCorpus {
    pub bitext: Vec<SentencePair>,
    pub src: EmbeddingMatrix,
    pub tgt: EmbeddingMatrix,
    pub labels: Vec<bool>,
}

struct Planter {
    dim: usize,
    noise_max: f64,
    clean_min: f64,
    rng: ChaCha8Rng,
    src: Vec<Vec<f64>>,
    tgt: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let n = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

impl Planter {
    fn new(spec: &SyntheticSpec) -> Self {
        Self {
            dim: spec.dim,
            noise_max: spec.noise_cos_max - SLACK,
            clean_min: spec.clean_cos_min,
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            src: Vec::new(),
            tgt: Vec::new(),
        }
    }

    fn gaussian_unit(&mut self) -> Vec<f64> {
        let v: Vec<f64> = (0..self.dim).map(|_| self.rng.sample(StandardNormal)).collect();
        normalized(v)
    }

    /// Unit vector at cosine exactly `c` from the unit vector `base`.
    fn partner(&mut self, base: &[f64], c: f64) -> Vec<f64> {
        let g = self.gaussian_unit();
        let along = dot(&g, base);
        let perp = normalized(g.iter().zip(base).map(|(x, b)| x - along * b).collect());
        let s = (1.0 - c * c).sqrt();
        normalized(base.iter().zip(&perp).map(|(b, p)| c * b + s * p).collect())
    }

    fn clean_cos(&mut self) -> f64 {
        let span = 1.0 - self.clean_min;
        self.clean_min + span * self.rng.random_range(0.05..0.95)
    }

    fn quiet_against(&self, v: &[f64], others: &[Vec<f64>]) -> bool {
        others.iter().all(|o| dot(v, o) <= self.noise_max)
    }

    /// Tries `make` until its rows are quiet against the existing rows of
    /// the opposite side, then commits them. New rows are partners of each
    /// other unless `unrelated` is set.
    fn plant<F>(&mut self, unrelated: bool, mut make: F) -> Result<(usize, usize)>
    where
        F: FnMut(&mut Self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>),
    {
        for _ in 0..MAX_TRIES {
            let (s, t) = make(self);
            if s.iter().all(|v| self.quiet_against(v, &self.tgt))
                && t.iter().all(|v| self.quiet_against(v, &self.src))
                && (!unrelated || s.iter().all(|v| self.quiet_against(v, &t)))
            {
                let at = (self.src.len(), self.tgt.len());
                self.src.extend(s);
                self.tgt.extend(t);
                return Ok(at);
            }
        }
        Err(Error::Domain(format!(
            "cannot keep cross cosines below {} in dim {} after {} rows; raise dim",
            self.noise_max + SLACK,
            self.dim,
            self.src.len() + self.tgt.len()
        )))
    }

    fn one_to_one(&mut self) -> Result<(usize, usize)> {
        self.plant(false, |p| {
            let s = p.gaussian_unit();
            let c = p.clean_cos();
            let t = p.partner(&s, c);
            (vec![s], vec![t])
        })
    }

    fn noise_pair(&mut self) -> Result<(usize, usize)> {
        self.plant(true, |p| (vec![p.gaussian_unit()], vec![p.gaussian_unit()]))
    }

    fn finish(self) -> Result<(EmbeddingMatrix, EmbeddingMatrix)> {
        Ok((
            EmbeddingMatrix::from_rows_f64(self.dim, &self.src)?,
            EmbeddingMatrix::from_rows_f64(self.dim, &self.tgt)?,
        ))
    }
}

fn pairs_text(n: usize, seed: u64) -> Vec<SentencePair> {
    gen_sentences(Side::Src, 0, n, seed)
        .into_iter()
        .zip(gen_sentences(Side::Tgt, 0, n, seed))
        .map(|(s, t)| SentencePair::new(s, t))
        .collect()
}

enum Event {
    OneToOne,
    Merge,
    InsertSrc,
    InsertTgt,
}

/// Plants a monotone document pair: 1-1 translations, 2-1 merges (the target
/// row is near the normalized mean of two source rows) and unmatched inserts
/// on either side. Translation links have block cosine at least
/// `clean_cos_min`; every cosine between rows that are not gold partners is
/// at most `noise_cos_max`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut p = Planter::new(spec);
    let mut links = Vec::with_capacity(spec.n_pairs);
    let mut labels = Vec::with_capacity(spec.n_pairs);
    for _ in 0..spec.n_pairs {
        let u: f64 = p.rng.random();
        let event = if u < spec.insert_rate {
            if p.rng.random_bool(0.5) {
                Event::InsertSrc
            } else {
                Event::InsertTgt
            }
        } else if u < spec.insert_rate + spec.merge_rate {
            Event::Merge
        } else {
            Event::OneToOne
        };
        let link = match event {
            Event::OneToOne => {
                let (i, j) = p.one_to_one()?;
                Link {
                    src: Some(IndexBlock::single(i)),
                    tgt: Some(IndexBlock::single(j)),
                    cost: 0.0,
                }
            }
            Event::Merge => {
                let (i, j) = p.plant(false, |p| {
                    let a = p.gaussian_unit();
                    let b = p.gaussian_unit();
                    let mean = normalized(a.iter().zip(&b).map(|(x, y)| x + y).collect());
                    let c = p.clean_cos();
                    let t = p.partner(&mean, c);
                    (vec![a, b], vec![t])
                })?;
                Link {
                    src: Some(IndexBlock::new(i, 2)?),
                    tgt: Some(IndexBlock::single(j)),
                    cost: 0.0,
                }
            }
            Event::InsertSrc => {
                let (i, _) = p.plant(false, |p| (vec![p.gaussian_unit()], vec![]))?;
                Link {
                    src: Some(IndexBlock::single(i)),
                    tgt: None,
                    cost: 0.0,
                }
            }
            Event::InsertTgt => {
                let (_, j) = p.plant(false, |p| (vec![], vec![p.gaussian_unit()]))?;
                Link {
                    src: None,
                    tgt: Some(IndexBlock::single(j)),
                    cost: 0.0,
                }
            }
        };
        labels.push(!link.is_null());
        links.push(link);
    }

    let src_sentences = gen_sentences(Side::Src, 0, p.src.len(), spec.seed);
    let tgt_sentences = gen_sentences(Side::Tgt, 0, p.tgt.len(), spec.seed);
    let (src, tgt) = p.finish()?;
    Ok(SyntheticCorpus {
        src_sentences,
        tgt_sentences,
        gold: Alignment::new(links),
        src,
        tgt,
        labels,
    })
}

/// `spec.n_pairs` clean pairs and `n_noise` unrelated pairs in shuffled
/// order. Clean pairs have cosine at least `clean_cos_min`; every other
/// cross cosine, noise pairs included, is at most `noise_cos_max`. Rates in
/// `spec` are ignored.
pub fn gen_pair_corpus(spec: &SyntheticSpec, n_noise: usize) -> Result<PairCorpus> {
    spec.validate()?;
    let mut p = Planter::new(spec);
    let mut labels: Vec<bool> = (0..spec.n_pairs + n_noise).map(|i| i < spec.n_pairs).collect();
    labels.shuffle(&mut p.rng);
    for &clean in &labels {
        if clean {
            p.one_to_one()?;
        } else {
            p.noise_pair()?;
        }
    }
    let bitext = pairs_text(labels.len(), spec.seed);
    let (src, tgt) = p.finish()?;
    Ok(PairCorpus {
        bitext,
        src,
        tgt,
        labels,
    })
}

/// Corpus with one hub target: every source shares a common direction `u`
/// with weight `shared`, and `n_hub` extra noise pairs all use `u` itself as
/// the target, so the hub sits at cosine `shared` from every source.
#[derive(Clone, Debug, PartialEq)]
pub struct HubSpec {
    pub n_clean: usize,
    pub n_noise: usize,
    pub n_hub: usize,
    pub dim: usize,
    pub shared: f64,
    /// Clean pair cosines are drawn uniformly from this range.
    pub clean_cos: (f64, f64),
    pub seed: u64,
}

impl Default for HubSpec {
    fn default() -> Self {
        Self {
            n_clean: 500,
            n_noise: 500,
            n_hub: 50,
            dim: 128,
            shared: 0.8,
            clean_cos: (0.6, 1.0),
            seed: 0,
        }
    }
}

pub fn gen_hub_corpus(spec: &HubSpec) -> Result<PairCorpus> {
    if spec.dim < 2 {
        return Err(Error::param("dim", "must be >= 2"));
    }
    if !(0.0..1.0).contains(&spec.shared) {
        return Err(Error::param("shared", "must lie in [0, 1)"));
    }
    let (lo, hi) = spec.clean_cos;
    if !(-1.0 < lo && lo < hi && hi <= 1.0) {
        return Err(Error::param("clean_cos", "need -1 < lo < hi <= 1"));
    }
    let base = SyntheticSpec {
        dim: spec.dim,
        seed: spec.seed,
        ..Default::default()
    };
    let mut p = Planter::new(&base);
    let hub = p.gaussian_unit();
    let rest = (1.0 - spec.shared * spec.shared).sqrt();
    let anisotropic = |p: &mut Planter| {
        let r = p.gaussian_unit();
        let along = dot(&r, &hub);
        let perp = normalized(r.iter().zip(&hub).map(|(x, h)| x - along * h).collect());
        normalized(hub.iter().zip(&perp).map(|(h, q)| spec.shared * h + rest * q).collect())
    };

    let n = spec.n_clean + spec.n_noise + spec.n_hub;
    let mut kinds: Vec<u8> = (0..n)
        .map(|i| match i {
            i if i < spec.n_clean => 0,
            i if i < spec.n_clean + spec.n_noise => 1,
            _ => 2,
        })
        .collect();
    kinds.shuffle(&mut p.rng);

    let mut src = Vec::with_capacity(n);
    let mut tgt = Vec::with_capacity(n);
    for &kind in &kinds {
        let s = anisotropic(&mut p);
        let t = match kind {
            0 => {
                let c = p.rng.random_range(lo..hi);
                p.partner(&s, c)
            }
            1 => anisotropic(&mut p),
            _ => hub.clone(),
        };
        src.push(s);
        tgt.push(t);
    }
    let bitext = pairs_text(n, spec.seed);
    Ok(PairCorpus {
        bitext,
        src: EmbeddingMatrix::from_rows_f64(spec.dim, &src)?,
        tgt: EmbeddingMatrix::from_rows_f64(spec.dim, &tgt)?,
        labels: kinds.iter().map(|&k| k == 0).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{block_embed, cosine};

    #[test]
    fn plain_spec_gives_diagonal_gold() {
        let c = gen_synthetic(&SyntheticSpec {
            n_pairs: 30,
            dim: 64,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(c.src.count(), 30);
        assert_eq!(c.tgt.count(), 30);
        for (k, l) in c.gold.links.iter().enumerate() {
            assert_eq!(l.src, Some(IndexBlock::single(k)));
            assert_eq!(l.tgt, Some(IndexBlock::single(k)));
        }
        assert!(c.labels.iter().all(|&b| b));
    }

    #[test]
    fn empty_spec() {
        let c = gen_synthetic(&SyntheticSpec {
            n_pairs: 0,
            ..Default::default()
        })
        .unwrap();
        assert!(c.src.is_empty() && c.tgt.is_empty() && c.gold.is_empty());
        assert!(c.src_sentences.is_empty());
    }

    #[test]
    fn merges_and_inserts_cover_both_documents() {
        let spec = SyntheticSpec {
            n_pairs: 200,
            dim: 128,
            insert_rate: 0.2,
            merge_rate: 0.2,
            seed: 3,
            ..Default::default()
        };
        let c = gen_synthetic(&spec).unwrap();
        c.gold.validate(c.src.count(), c.tgt.count()).unwrap();
        assert!(c.gold.links.iter().any(|l| l.shape() == (2, 1)));
        assert!(c.gold.links.iter().any(|l| l.shape() == (1, 0)));
        assert!(c.gold.links.iter().any(|l| l.shape() == (0, 1)));
        for l in c.gold.non_null() {
            let s = block_embed(&c.src, l.src.unwrap()).unwrap();
            let t = block_embed(&c.tgt, l.tgt.unwrap()).unwrap();
            assert!(cosine(&s, &t).unwrap() >= 0.9);
        }
        let again = gen_synthetic(&spec).unwrap();
        assert_eq!(again.src, c.src);
        assert_eq!(again.tgt_sentences, c.tgt_sentences);
    }

    #[test]
    fn tiny_dim_is_reported_infeasible() {
        let spec = SyntheticSpec {
            n_pairs: 50,
            dim: 2,
            ..Default::default()
        };
        assert!(matches!(gen_synthetic(&spec), Err(Error::Domain(_))));
        let bad = SyntheticSpec {
            insert_rate: 0.6,
            merge_rate: 0.5,
            ..Default::default()
        };
        assert!(gen_synthetic(&bad).is_err());
    }

    #[test]
    fn hub_sits_near_every_source() {
        let c = gen_hub_corpus(&HubSpec {
            n_clean: 20,
            n_noise: 20,
            n_hub: 5,
            ..Default::default()
        })
        .unwrap();
        let hub_row = c.labels.iter().zip(0..).find_map(|(&l, i)| {
            let t = c.tgt.row(i);
            (!l && c.bitext.len() > i && (0..c.tgt.count()).filter(|&j| c.tgt.row(j) == t).count() == 5)
                .then_some(i)
        });
        let h = c.tgt.row(hub_row.expect("hub present"));
        for s in c.src.rows() {
            assert!(cosine(s, h).unwrap() >= 0.6);
        }
    }
}

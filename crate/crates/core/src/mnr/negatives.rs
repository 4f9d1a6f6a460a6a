use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// Neighbors on each side of the positive taken as negatives.
    pub window: usize,
    /// Random negatives per anchor.
    pub random_negatives: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub momentum: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            window: 2,
            random_negatives: 2,
            batch_size: 32,
            lr: 0.5,
            epochs: 5,
            seed: 0,
            momentum: 0.9,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if 2 * self.window + self.random_negatives == 0 {
            return Err(Error::param(
                "window/random_negatives",
                "need at least one negative (2W + R >= 1)",
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch_size", "must be >= 1"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::param("lr", "must be a non-negative finite number"));
        }
        if self.epochs == 0 {
            return Err(Error::param("epochs", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::param("momentum", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// One anchor: source `anchor` is positive with target `anchor`, negative
/// with every target in `negatives`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContrastiveItem {
    pub anchor: usize,
    pub negatives: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContrastiveBatch {
    pub items: Vec<ContrastiveItem>,
}

/// Negative sets for the first epoch.
pub fn build_negative_sets(n_pairs: usize, cfg: &TrainConfig) -> Result<Vec<ContrastiveBatch>> {
    build_negative_sets_for_epoch(n_pairs, cfg, 0)
}

/// Window negatives `{i-W..=i+W} \ {i}` clipped to the corpus, plus `R`
/// random targets drawn without replacement from outside the window. The
/// random draws come from the ChaCha stream `(seed, epoch)`.
pub fn build_negative_sets_for_epoch(
    n_pairs: usize,
    cfg: &TrainConfig,
    epoch: u64,
) -> Result<Vec<ContrastiveBatch>> {
    cfg.validate()?;
    if n_pairs == 0 {
        return Err(Error::param("n_pairs", "need at least one pair"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(epoch);

    let items: Vec<ContrastiveItem> = (0..n_pairs)
        .map(|i| {
            let lo = i.saturating_sub(cfg.window);
            let hi = (i + cfg.window).min(n_pairs - 1);
            let mut negatives: Vec<usize> = (lo..=hi).filter(|&j| j != i).collect();

            // candidates: everything outside lo..=hi, addressed by rank
            let excluded = hi - lo + 1;
            let pool = n_pairs - excluded;
            let take = cfg.random_negatives.min(pool);
            if take > 0 {
                let mut random: Vec<usize> = index::sample(&mut rng, pool, take)
                    .into_iter()
                    .map(|r| if r < lo { r } else { r + excluded })
                    .collect();
                random.sort_unstable();
                negatives.extend(random);
            }
            ContrastiveItem {
                anchor: i,
                negatives,
            }
        })
        .collect();

    Ok(items
        .chunks(cfg.batch_size)
        .map(|c| ContrastiveBatch { items: c.to_vec() })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(window: usize, random: usize) -> TrainConfig {
        TrainConfig {
            window,
            random_negatives: random,
            batch_size: 8,
            ..Default::default()
        }
    }

    fn item(batches: &[ContrastiveBatch], i: usize, k: usize) -> &ContrastiveItem {
        &batches[i / k].items[i % k]
    }

    #[test]
    fn window_examples() {
        let b = build_negative_sets(100, &cfg(1, 0)).unwrap();
        assert_eq!(item(&b, 5, 8).negatives, vec![4, 6]);
        let b = build_negative_sets(100, &cfg(2, 0)).unwrap();
        assert_eq!(item(&b, 0, 8).negatives, vec![1, 2]);
        assert_eq!(item(&b, 99, 8).negatives, vec![97, 98]);
    }

    #[test]
    fn batching_and_determinism() {
        let c = cfg(1, 3);
        let a = build_negative_sets(20, &c).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a[2].items.len(), 4);
        assert_eq!(a, build_negative_sets(20, &c).unwrap());
        assert_ne!(a, build_negative_sets_for_epoch(20, &c, 1).unwrap());
    }

    #[test]
    fn random_negatives_avoid_window() {
        let b = build_negative_sets(10, &cfg(1, 7)).unwrap();
        let it = item(&b, 4, 8);
        // window {3, 5} plus every one of the 7 remaining targets
        assert_eq!(it.negatives, vec![3, 5, 0, 1, 2, 6, 7, 8, 9]);
    }

    #[test]
    fn rejects_no_negatives() {
        assert!(build_negative_sets(10, &cfg(0, 0)).is_err());
        assert!(build_negative_sets(0, &cfg(1, 0)).is_err());
    }
}

//! Flat `key = value` config files. Command-line flags win over file values,
//! which win over built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "jobs",
    "strict",
    // align
    "method",
    "max_block",
    "skip_penalty",
    "block_penalty",
    "baseline_samples",
    "band_width",
    "full_dp_threshold",
    // score
    "k",
    "neighborhood",
    "k_divisor",
    // preprocess / subsample
    "overlap_threshold",
    "en_side",
    "expected_other",
    "min_confidence",
    "budgets",
    "budget_fraction",
    "overflow",
    // train
    "window",
    "random_negatives",
    "batch_size",
    "lr",
    "epochs",
    "momentum",
    "scale",
    "include_positive",
    "out_dim",
    // gen-synthetic
    "docs",
    "noise_docs",
    "pairs_per_doc",
    "dim",
    "insert_rate",
    "merge_rate",
    "clean_cos_min",
    "noise_cos_max",
];

#[derive(Debug, Default)]
pub struct Config {
    path: Option<PathBuf>,
    values: BTreeMap<String, (String, usize)>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text, Some(path.to_path_buf()))
    }

    pub fn parse(text: &str, path: Option<PathBuf>) -> Result<Self> {
        let shown = path
            .as_ref()
            .map_or("<config>".to_string(), |p| p.display().to_string());
        let mut values = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| anyhow!("{shown}:{line}: expected `key = value`"))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                bail!("{shown}:{line}: unknown key `{key}`");
            }
            if values.contains_key(key) {
                bail!("{shown}:{line}: duplicate key `{key}`");
            }
            values.insert(key.to_string(), (value.trim().to_string(), line));
        }
        Ok(Self { path, values })
    }

    fn where_(&self, line: usize) -> String {
        match &self.path {
            Some(p) => format!("{}:{line}", p.display()),
            None => format!("<config>:{line}"),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow!("{}: bad value for `{key}`: {e}", self.where_(*line))),
        }
    }

    /// Flag value, else config value, else `default`.
    pub fn resolve<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }

    pub fn resolve_opt<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(match flag {
            Some(v) => Some(v),
            None => self.get(key)?,
        })
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.get::<bool>(key)?.unwrap_or(false))
    }
}

/// Comma-separated list parsed element-wise.
pub fn parse_list<T>(s: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| anyhow!("bad list item `{p}`: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves() {
        let c = Config::parse("# comment\nk = 8\n\nskip_penalty=0.3 # trailing\n", None).unwrap();
        assert_eq!(c.get::<usize>("k").unwrap(), Some(8));
        assert_eq!(c.resolve(Some(2usize), "k", 4).unwrap(), 2);
        assert_eq!(c.resolve(None, "k", 4usize).unwrap(), 8);
        assert_eq!(c.resolve(None, "window", 2usize).unwrap(), 2);
        assert_eq!(c.get::<f64>("skip_penalty").unwrap(), Some(0.3));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = Config::parse("k = 4\nbogus\n", None).unwrap_err();
        assert!(e.to_string().contains(":2:"), "{e}");
        let e = Config::parse("\n\nnope = 1\n", None).unwrap_err();
        assert!(e.to_string().contains(":3:") && e.to_string().contains("nope"), "{e}");
        let c = Config::parse("k = four\n", None).unwrap();
        let e = c.get::<usize>("k").unwrap_err();
        assert!(e.to_string().contains(":1:"), "{e}");
        assert!(Config::parse("k=1\nk=2\n", None).is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<u64>("2000000, 3000000,").unwrap(), vec![2_000_000, 3_000_000]);
        assert!(parse_list::<u64>("1,x").is_err());
    }
}

//! Corpus cleaning applied to aligned bitext before filtering: exact
//! deduplication, removal of pairs whose two sides mostly overlap, and
//! language-ID screening of the English side.
//!
//! Every filter keeps the surviving pairs in their original order and never
//! edits sentence text. The `*_indices` variants return the positions of the
//! surviving pairs so that parallel data (embeddings) can be subset the same
//! way.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::bitext::{split_lines, SentencePair, Side};
use crate::error::{Error, Result};

pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.9;

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Indices of the first occurrence of each pair, comparing whitespace-
/// normalized text.
pub fn deduplicate_indices(bitext: &[SentencePair]) -> Vec<usize> {
    let mut seen = HashSet::with_capacity(bitext.len());
    bitext
        .iter()
        .enumerate()
        .filter(|(_, p)| seen.insert((normalize_ws(&p.src), normalize_ws(&p.tgt))))
        .map(|(i, _)| i)
        .collect()
}

pub fn deduplicate(bitext: &[SentencePair]) -> Vec<SentencePair> {
    pick(bitext, &deduplicate_indices(bitext))
}

/// Length of the longest common subsequence of two character sequences.
pub fn lcs_len(a: &[char], b: &[char]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0u32; b.len() + 1];
    let mut cur = vec![0u32; b.len() + 1];
    for &ca in a {
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()] as usize
}

/// Character-level LCS length divided by the longer side's length.
pub fn overlap_ratio(src: &str, tgt: &str) -> f64 {
    let a: Vec<char> = src.chars().collect();
    let b: Vec<char> = tgt.chars().collect();
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => lcs_len(&a, &b) as f64 / a.len().max(b.len()) as f64,
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::param("threshold", format!("{threshold} is outside (0, 1]")));
    }
    Ok(())
}

/// Indices of pairs whose overlap ratio does not exceed `threshold`.
pub fn filter_overlap_indices(bitext: &[SentencePair], threshold: f64) -> Result<Vec<usize>> {
    check_threshold(threshold)?;
    Ok(bitext
        .iter()
        .enumerate()
        .filter(|(_, p)| overlap_ratio(&p.src, &p.tgt) <= threshold)
        .map(|(i, _)| i)
        .collect())
}

pub fn filter_overlap(bitext: &[SentencePair], threshold: f64) -> Result<Vec<SentencePair>> {
    Ok(pick(bitext, &filter_overlap_indices(bitext, threshold)?))
}

fn script_bucket(c: char) -> Option<usize> {
    match c as u32 {
        0x1780..=0x17FF => Some(0),
        0x0600..=0x06FF | 0x0750..=0x077F | 0xFB50..=0xFDFF => Some(1),
        _ if c.is_ascii_alphabetic() => Some(2),
        _ => Some(3),
    }
}

const SCRIPT_CODES: [&str; 4] = ["km", "ps", "en", "unk"];

/// Guesses a language code from the script of the text's letters: `km`
/// (Khmer), `ps` (Arabic script), `en` (Basic Latin), else `unk`. Ties and
/// letterless text give `unk`.
pub fn detect_script(text: &str) -> &'static str {
    let mut votes = [0usize; 4];
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        if let Some(b) = script_bucket(c) {
            votes[b] += 1;
        }
    }
    let top = *votes.iter().max().unwrap();
    if top == 0 || votes.iter().filter(|&&v| v == top).count() > 1 {
        return "unk";
    }
    SCRIPT_CODES[votes.iter().position(|&v| v == top).unwrap()]
}

/// Externally predicted languages for one pair.
#[derive(Clone, Debug, PartialEq)]
pub struct LidPrediction {
    pub src_lang: String,
    pub src_conf: Option<f64>,
    pub tgt_lang: String,
    pub tgt_conf: Option<f64>,
}

impl LidPrediction {
    fn side(&self, side: Side) -> (&str, Option<f64>) {
        match side {
            Side::Src => (&self.src_lang, self.src_conf),
            Side::Tgt => (&self.tgt_lang, self.tgt_conf),
        }
    }
}

/// Parses the sidecar format `src_lang<TAB>src_conf<TAB>tgt_lang<TAB>tgt_conf`,
/// with `-` for a missing confidence.
pub fn parse_lid(text: &str) -> Result<Vec<LidPrediction>> {
    let conf = |s: &str, line: usize| -> Result<Option<f64>> {
        if s == "-" {
            return Ok(None);
        }
        let v = s.parse::<f64>().map_err(|e| Error::Parse {
            line,
            detail: format!("bad confidence `{s}`: {e}"),
        })?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Parse {
                line,
                detail: format!("confidence {v} outside [0, 1]"),
            });
        }
        Ok(Some(v))
    };
    split_lines(text)
        .into_iter()
        .enumerate()
        .map(|(k, raw)| {
            let line = k + 1;
            let f: Vec<&str> = raw.split('\t').collect();
            if f.len() != 4 {
                return Err(Error::Parse {
                    line,
                    detail: format!("expected 4 tab-separated fields, found {}", f.len()),
                });
            }
            if f[0].is_empty() || f[2].is_empty() {
                return Err(Error::Parse {
                    line,
                    detail: "empty language code".into(),
                });
            }
            Ok(LidPrediction {
                src_lang: f[0].to_owned(),
                src_conf: conf(f[1], line)?,
                tgt_lang: f[2].to_owned(),
                tgt_conf: conf(f[3], line)?,
            })
        })
        .collect()
}

pub fn read_lid(path: impl AsRef<Path>) -> Result<Vec<LidPrediction>> {
    let path = path.as_ref();
    parse_lid(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Options for [`filter_lang`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LangFilter {
    pub en_side: Side,
    /// When set, external predictions below this confidence are rejected.
    pub min_confidence: Option<f64>,
    /// Strict mode: the non-English side must be predicted as this code.
    pub expected_other: Option<String>,
}

fn predicted_is(
    pair: &SentencePair,
    pred: Option<&LidPrediction>,
    side: Side,
    code: &str,
    min_conf: Option<f64>,
) -> bool {
    match pred {
        Some(p) => {
            let (lang, conf) = p.side(side);
            let confident = match (min_conf, conf) {
                (Some(min), Some(c)) => c >= min,
                _ => true,
            };
            lang == code && confident
        }
        None => detect_script(pair.side(side)) == code,
    }
}

/// Indices of pairs whose English side is identified as `en`.
pub fn filter_lang_indices(
    bitext: &[SentencePair],
    opts: &LangFilter,
    predictions: Option<&[LidPrediction]>,
) -> Result<Vec<usize>> {
    if let Some(preds) = predictions {
        if preds.len() != bitext.len() {
            return Err(Error::LengthMismatch {
                what: "language predictions vs bitext",
                left: preds.len(),
                right: bitext.len(),
            });
        }
    }
    Ok(bitext
        .iter()
        .enumerate()
        .filter(|&(i, pair)| {
            let pred = predictions.map(|p| &p[i]);
            let en_ok = predicted_is(pair, pred, opts.en_side, "en", opts.min_confidence);
            let other_ok = opts.expected_other.as_deref().is_none_or(|code| {
                predicted_is(pair, pred, opts.en_side.other(), code, opts.min_confidence)
            });
            en_ok && other_ok
        })
        .map(|(i, _)| i)
        .collect())
}

pub fn filter_lang(
    bitext: &[SentencePair],
    opts: &LangFilter,
    predictions: Option<&[LidPrediction]>,
) -> Result<Vec<SentencePair>> {
    Ok(pick(bitext, &filter_lang_indices(bitext, opts, predictions)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreprocessConfig {
    pub overlap_threshold: f64,
    pub lang: LangFilter,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            overlap_threshold: DEFAULT_OVERLAP_THRESHOLD,
            lang: LangFilter::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreprocessOutcome {
    /// Indices into the input of the surviving pairs.
    pub kept: Vec<usize>,
    pub removed_dedup: usize,
    pub removed_overlap: usize,
    pub removed_lang: usize,
}

/// Runs dedup, then overlap removal, then language ID.
pub fn preprocess(
    bitext: &[SentencePair],
    cfg: &PreprocessConfig,
    predictions: Option<&[LidPrediction]>,
) -> Result<PreprocessOutcome> {
    if let Some(p) = predictions {
        if p.len() != bitext.len() {
            return Err(Error::LengthMismatch {
                what: "language predictions vs bitext",
                left: p.len(),
                right: bitext.len(),
            });
        }
    }
    let stage1 = deduplicate_indices(bitext);
    let pairs1 = pick(bitext, &stage1);

    let keep2 = filter_overlap_indices(&pairs1, cfg.overlap_threshold)?;
    let stage2: Vec<usize> = keep2.iter().map(|&k| stage1[k]).collect();
    let pairs2 = pick(bitext, &stage2);

    let preds2 = predictions.map(|p| pick(p, &stage2));
    let keep3 = filter_lang_indices(&pairs2, &cfg.lang, preds2.as_deref())?;
    let kept: Vec<usize> = keep3.iter().map(|&k| stage2[k]).collect();

    Ok(PreprocessOutcome {
        removed_dedup: bitext.len() - stage1.len(),
        removed_overlap: stage1.len() - stage2.len(),
        removed_lang: stage2.len() - kept.len(),
        kept,
    })
}

pub(crate) fn pick<T: Clone>(items: &[T], indices: &[usize]) -> Vec<T> {
    indices.iter().map(|&i| items[i].clone()).collect()
}

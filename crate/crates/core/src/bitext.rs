//! Sentence-pair corpora and their TSV encodings.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SentencePair {
    pub src: String,
    pub tgt: String,
}

impl SentencePair {
    pub fn new(src: impl Into<String>, tgt: impl Into<String>) -> Self {
        Self {
            src: src.into(),
            tgt: tgt.into(),
        }
    }

    pub fn side(&self, side: Side) -> &str {
        match side {
            Side::Src => &self.src,
            Side::Tgt => &self.tgt,
        }
    }
}

pub type Bitext = Vec<SentencePair>;

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredPair {
    pub src: String,
    pub tgt: String,
    pub score: f64,
}

impl ScoredPair {
    pub fn side(&self, side: Side) -> &str {
        match side {
            Side::Src => &self.src,
            Side::Tgt => &self.tgt,
        }
    }
}

pub type ScoredBitext = Vec<ScoredPair>;

/// Which side of a pair a setting refers to, e.g. the English side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Side {
    #[default]
    Src,
    Tgt,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Src => Side::Tgt,
            Side::Tgt => Side::Src,
        }
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "src" | "source" => Ok(Side::Src),
            "tgt" | "target" => Ok(Side::Tgt),
            other => Err(Error::param("side", format!("expected src or tgt, got `{other}`"))),
        }
    }
}

/// Splits text into lines on LF, tolerating a missing final newline.
pub fn split_lines(text: &str) -> Vec<&str> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if text.is_empty() {
        return Vec::new();
    }
    body.split('\n').collect()
}

pub fn read_lines(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(split_lines(&text).into_iter().map(str::to_owned).collect())
}

pub fn write_lines<S: AsRef<str>>(path: impl AsRef<Path>, lines: &[S]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for l in lines {
        out.push_str(l.as_ref());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses `src<TAB>tgt` lines.
pub fn parse_bitext(text: &str) -> Result<Bitext> {
    split_lines(text)
        .into_iter()
        .enumerate()
        .map(|(k, line)| {
            let mut parts = line.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(s), Some(t), None) => Ok(SentencePair::new(s, t)),
                _ => Err(Error::Parse {
                    line: k + 1,
                    detail: "expected exactly 2 tab-separated fields".into(),
                }),
            }
        })
        .collect()
}

pub fn format_bitext(pairs: &[SentencePair]) -> String {
    let mut out = String::new();
    for p in pairs {
        writeln!(out, "{}\t{}", p.src, p.tgt).unwrap();
    }
    out
}

/// Parses `score<TAB>src<TAB>tgt` lines.
pub fn parse_scored(text: &str) -> Result<ScoredBitext> {
    split_lines(text)
        .into_iter()
        .enumerate()
        .map(|(k, line)| {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: k + 1,
                    detail: "expected exactly 3 tab-separated fields".into(),
                });
            }
            let score = fields[0].parse::<f64>().map_err(|e| Error::Parse {
                line: k + 1,
                detail: format!("bad score `{}`: {e}", fields[0]),
            })?;
            if !score.is_finite() {
                return Err(Error::Parse {
                    line: k + 1,
                    detail: "score is not finite".into(),
                });
            }
            Ok(ScoredPair {
                score,
                src: fields[1].to_owned(),
                tgt: fields[2].to_owned(),
            })
        })
        .collect()
}

pub fn format_scored(pairs: &[ScoredPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        writeln!(out, "{:.6}\t{}\t{}", p.score, p.src, p.tgt).unwrap();
    }
    out
}

pub fn read_bitext(path: impl AsRef<Path>) -> Result<Bitext> {
    let path = path.as_ref();
    parse_bitext(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_bitext(path: impl AsRef<Path>, pairs: &[SentencePair]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_bitext(pairs)).map_err(|e| Error::io(path, e))
}

pub fn read_scored(path: impl AsRef<Path>) -> Result<ScoredBitext> {
    let path = path.as_ref();
    parse_scored(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_scored(path: impl AsRef<Path>, pairs: &[ScoredPair]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_scored(pairs)).map_err(|e| Error::io(path, e))
}

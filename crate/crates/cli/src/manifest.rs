//! Document-pair manifests: TSV with columns
//! `doc_id, src_sentences, tgt_sentences, src_embeddings, tgt_embeddings`.
//! Relative paths resolve against the manifest's directory.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use btx::bitext::read_lines;
use btx::embed::{load_embeddings, EmbeddingMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub doc_id: String,
    pub src_sentences: PathBuf,
    pub tgt_sentences: PathBuf,
    pub src_embeddings: PathBuf,
    pub tgt_embeddings: PathBuf,
}

/// An entry whose files have been read and cross-checked.
pub struct LoadedDoc {
    pub doc_id: String,
    pub src_sentences: Vec<String>,
    pub tgt_sentences: Vec<String>,
    pub src: EmbeddingMatrix,
    pub tgt: EmbeddingMatrix,
}

pub struct Rejected {
    /// Doc id, or `line N` when the line could not be split.
    pub name: String,
    pub reason: String,
}

/// Parses the manifest text. Malformed lines come back as rejections.
pub fn parse_manifest(text: &str, base: &Path) -> (Vec<ManifestEntry>, Vec<Rejected>) {
    let mut entries = Vec::new();
    let mut rejected = Vec::new();
    let mut seen = HashSet::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() != 5 {
            rejected.push(Rejected {
                name: format!("line {}", k + 1),
                reason: format!("expected 5 tab-separated columns, found {}", cols.len()),
            });
            continue;
        }
        if !seen.insert(cols[0].to_string()) {
            rejected.push(Rejected {
                name: cols[0].to_string(),
                reason: format!("duplicate doc_id on line {}", k + 1),
            });
            continue;
        }
        let p = |s: &str| base.join(s);
        entries.push(ManifestEntry {
            doc_id: cols[0].to_string(),
            src_sentences: p(cols[1]),
            tgt_sentences: p(cols[2]),
            src_embeddings: p(cols[3]),
            tgt_embeddings: p(cols[4]),
        });
    }
    (entries, rejected)
}

pub fn read_manifest(path: &Path) -> Result<(Vec<ManifestEntry>, Vec<Rejected>)> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read manifest {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(parse_manifest(&text, base))
}

/// Reads the entry's files and checks line counts against row counts.
pub fn load_entry(e: &ManifestEntry) -> std::result::Result<LoadedDoc, String> {
    let src_sentences = read_lines(&e.src_sentences).map_err(|x| x.to_string())?;
    let tgt_sentences = read_lines(&e.tgt_sentences).map_err(|x| x.to_string())?;
    let src = load_embeddings(&e.src_embeddings).map_err(|x| x.to_string())?;
    let tgt = load_embeddings(&e.tgt_embeddings).map_err(|x| x.to_string())?;
    if src_sentences.len() != src.count() {
        return Err(format!(
            "source has {} lines but {} embedding rows",
            src_sentences.len(),
            src.count()
        ));
    }
    if tgt_sentences.len() != tgt.count() {
        return Err(format!(
            "target has {} lines but {} embedding rows",
            tgt_sentences.len(),
            tgt.count()
        ));
    }
    if src.dim() != tgt.dim() {
        return Err(format!("embedding dims differ: {} vs {}", src.dim(), tgt.dim()));
    }
    Ok(LoadedDoc {
        doc_id: e.doc_id.clone(),
        src_sentences,
        tgt_sentences,
        src,
        tgt,
    })
}

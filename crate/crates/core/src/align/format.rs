//! Text formats for alignments and similarity matrices.
//!
//! An alignment stanza is one line per link,
//! `src_indices<TAB>tgt_indices<TAB>cost`, with 0-based comma-joined indices
//! and `-` for an empty side. Stanzas are separated by blank lines and may
//! start with a `# doc_id` line.

use std::fmt::Write as _;

use super::{Alignment, Link};
use crate::embed::IndexBlock;
use crate::error::{Error, Result};

fn fmt_block(out: &mut String, b: Option<IndexBlock>) {
    match b {
        None => out.push('-'),
        Some(b) => {
            for (k, i) in b.indices().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write!(out, "{i}").unwrap();
            }
        }
    }
}

/// Renders a stanza, optionally headed by `# doc_id`, terminated by a blank
/// line.
pub fn format_alignment(doc_id: Option<&str>, a: &Alignment) -> String {
    let mut out = String::new();
    if let Some(id) = doc_id {
        writeln!(out, "# {id}").unwrap();
    }
    for link in &a.links {
        fmt_block(&mut out, link.src);
        out.push('\t');
        fmt_block(&mut out, link.tgt);
        writeln!(out, "\t{:.6}", link.cost).unwrap();
    }
    out.push('\n');
    out
}

fn parse_block(field: &str, line: usize) -> Result<Option<IndexBlock>> {
    if field == "-" {
        return Ok(None);
    }
    let indices = field
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Parse {
            line,
            detail: format!("bad index list `{field}`: {e}"),
        })?;
    IndexBlock::from_indices(&indices)
        .map(Some)
        .map_err(|e| Error::Parse {
            line,
            detail: e.to_string(),
        })
}

/// Parses a stream of stanzas. Returns `(doc_id, alignment)` per stanza.
pub fn parse_alignments(text: &str) -> Result<Vec<(Option<String>, Alignment)>> {
    let mut out = Vec::new();
    let mut current: Option<(Option<String>, Vec<Link>)> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        if raw.trim().is_empty() {
            if let Some((id, links)) = current.take() {
                out.push((id, Alignment::new(links)));
            }
            continue;
        }
        if let Some(id) = raw.strip_prefix('#') {
            if let Some((prev_id, links)) = current.take() {
                out.push((prev_id, Alignment::new(links)));
            }
            current = Some((Some(id.trim().to_string()), Vec::new()));
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line,
                detail: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let src = parse_block(fields[0], line)?;
        let tgt = parse_block(fields[1], line)?;
        let cost = fields[2].trim().parse::<f64>().map_err(|e| Error::Parse {
            line,
            detail: format!("bad cost `{}`: {e}", fields[2]),
        })?;
        if src.is_none() && tgt.is_none() {
            return Err(Error::Parse {
                line,
                detail: "link is empty on both sides".into(),
            });
        }
        current
            .get_or_insert_with(|| (None, Vec::new()))
            .1
            .push(Link { src, tgt, cost });
    }
    if let Some((id, links)) = current {
        out.push((id, Alignment::new(links)));
    }
    Ok(out)
}

/// Similarity matrix as TSV, one source sentence per line.
pub fn write_similarity_tsv(sim: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in sim {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push('\t');
            }
            write!(out, "{v:.6}").unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::make_link;

    #[test]
    fn stanza_round_trip() {
        let a = Alignment::new(vec![
            make_link(0, 0, 2, 1, 0.25),
            make_link(2, 1, 0, 1, 1.0),
            make_link(2, 2, 1, 0, 1.0),
        ]);
        let text = format_alignment(Some("doc-7"), &a);
        assert_eq!(text, "# doc-7\n0,1\t0\t0.250000\n-\t1\t1.000000\n2\t-\t1.000000\n\n");
        let mut twice = text.clone();
        twice.push_str(&format_alignment(None, &a));
        let parsed = parse_alignments(&twice).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].0.as_deref(), Some("doc-7"));
        assert_eq!(parsed[1].0, None);
        assert_eq!(parsed[0].1, a);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_alignments("0\t0\t0.0\n1,3\t1\t0.0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_alignments("-\t-\t0\n").is_err());
        assert!(parse_alignments("0\t0\n").is_err());
    }

    #[test]
    fn similarity_tsv_layout() {
        assert_eq!(
            write_similarity_tsv(&[vec![1.0, 0.0], vec![0.0, 1.0]]),
            "1.000000\t0.000000\n0.000000\t1.000000\n"
        );
    }
}

use std::fmt::{Display, Write as _};
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};

/// Run report written as `key<TAB>value` lines.
pub struct Report {
    started: Instant,
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Self {
            started: Instant::now(),
            entries: Vec::new(),
        };
        r.add("command", command);
        r
    }

    pub fn add(&mut self, key: impl Into<String>, value: impl Display) {
        let value = value.to_string().replace(['\t', '\n'], " ");
        self.entries.push((key.into(), value));
    }

    pub fn config(&mut self, key: &str, value: impl Display) {
        self.add(format!("config.{key}"), value);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            writeln!(out, "{k}\t{v}").unwrap();
        }
        writeln!(out, "wall_time_ms\t{}", self.started.elapsed().as_millis()).unwrap();
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = self.render();
        let path = dir.join("report.tsv");
        fs::write(&path, &text).with_context(|| format!("cannot write {}", path.display()))?;
        print!("{text}");
        Ok(())
    }
}

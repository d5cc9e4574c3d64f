//! Run outputs: CSV tables with `#` metadata lines and a single header row, plus JSON summaries.
//! Nothing time- or host-dependent is written, so identical inputs give identical bytes.

use crate::error::Result;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Output directory of one command.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
    metadata: Vec<String>,
}

impl OutputDir {
    /// Creates the directory; `metadata` lines head every CSV written here.
    pub fn create(root: &Path, metadata: Vec<String>) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), metadata })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn csv(&self, name: &str, table: &Table) -> Result<()> {
        let mut s = String::new();
        for m in &self.metadata {
            writeln!(s, "# {m}").unwrap();
        }
        for m in &table.metadata {
            writeln!(s, "# {m}").unwrap();
        }
        s.push_str(&table.render());
        fs::write(self.path(name), s)?;
        Ok(())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| crate::Error::InvalidInput(e.to_string()))?;
        s.push('\n');
        fs::write(self.path(name), s)?;
        Ok(())
    }
}

/// CSV table of preformatted cells.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    metadata: Vec<String>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new(), metadata: Vec::new() }
    }

    pub fn note(&mut self, line: impl Into<String>) -> &mut Self {
        self.metadata.push(line.into());
        self
    }

    /// Panics if the row width differs from the header.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn push_f64(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| num(x)).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Shortest round-trip representation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

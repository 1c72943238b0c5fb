//! Minimal CSV reading/writing for the toolkit's own schemas: numeric
//! fields and simple identifiers, no quoting.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context as _, Result};

pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(header.len() + 1 + rows.len() * 24);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Column index or a schema error naming the expectation.
    pub fn require(&self, name: &str, purpose: &str) -> Result<usize> {
        self.column(name).ok_or_else(|| {
            anyhow::anyhow!(
                "schema mismatch for {purpose}: missing column `{name}` (header: {})",
                self.header.join(",")
            )
        })
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = match lines.next() {
        Some(h) => h.split(',').map(str::to_string).collect::<Vec<_>>(),
        None => bail!("{} is empty", path.display()),
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(str::to_string).collect();
        if fields.len() != header.len() {
            bail!(
                "{} line {}: {} fields, header has {}",
                path.display(),
                i + 2,
                fields.len(),
                header.len()
            );
        }
        rows.push(fields);
    }
    Ok(CsvTable { header, rows })
}

pub fn parse_f64(field: &str, what: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .with_context(|| format!("bad {what}: `{field}`"))
}

//! `csikit report`: human-readable view of a `correct` run.

use std::path::Path;

use anyhow::{Context as _, Result};

use crate::csvio::{parse_f64, read_csv};

pub fn run(dir: &Path) -> Result<()> {
    let summary = std::fs::read_to_string(dir.join("summary.txt"))
        .with_context(|| format!("reading {}/summary.txt", dir.display()))?;
    println!("== correction summary ({}) ==", dir.display());
    print!("{summary}");

    let channels = read_csv(&dir.join("channels.csv"))?;
    let channel_col = channels.require("channel", "report")?;
    let packets_col = channels.require("packets", "report")?;
    let median_col = channels.require("median_rad", "report")?;
    println!("\n{:>8} {:>8} {:>12}", "channel", "packets", "median_rad");
    for row in &channels.rows {
        let median = parse_f64(&row[median_col], "median_rad")?;
        println!(
            "{:>8} {:>8} {:>12.4}",
            row[channel_col], row[packets_col], median
        );
    }

    let correction = read_csv(&dir.join("correction.csv"))?;
    let samples_col = correction.require("samples", "report")?;
    let corrected_col = correction.require("corrected_rad", "report")?;
    let mut covered = 0usize;
    let mut min_samples = usize::MAX;
    let mut max_samples = 0usize;
    for row in &correction.rows {
        if row[corrected_col].is_empty() {
            continue;
        }
        covered += 1;
        let s: usize = row[samples_col].parse().unwrap_or(0);
        min_samples = min_samples.min(s);
        max_samples = max_samples.max(s);
    }
    if covered > 0 {
        println!("\nbins covered: {covered}, samples per bin: {min_samples}..{max_samples}");
    } else {
        println!("\nno covered bins");
    }
    Ok(())
}

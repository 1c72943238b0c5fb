//! `csikit stitch`: deposit captures on the composite grid, merge per
//! bin and check cross-channel consistency.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;
use csikit_core::grid::{
    global_bin_frequency_mhz, overlap_consistency, stitch_offsets, GLOBAL_BIN_COUNT,
};
use csikit_core::model::PhaseOffsetVector;
use csikit_core::offsets::{circular_safe_median, extract_phase_offset};
use serde::Serialize;

use crate::commands::load_captures;
use crate::config::Context;
use crate::csvio::write_csv;

#[derive(Debug, Serialize)]
struct StitchParams {
    captures: Vec<PathBuf>,
    tolerance_rad: f64,
}

pub fn run(ctx: &Context, tolerance: Option<f64>, captures: &[PathBuf]) -> Result<()> {
    let tolerance = tolerance.unwrap_or(0.1);
    let sets = load_captures(captures)?;
    ctx.ensure_out()?;

    let mut per_channel_count: BTreeMap<u16, usize> = BTreeMap::new();
    let mut observations: Vec<(usize, u16, PhaseOffsetVector)> = Vec::new();
    for (path, set) in &sets {
        for frame in &set.frames {
            let offsets = extract_phase_offset(frame, 0)
                .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
            let t = per_channel_count.entry(frame.channel_number).or_insert(0);
            *t += 1;
            observations.push((*t, frame.channel_number, offsets));
        }
    }

    let refs: Vec<(usize, u16, &PhaseOffsetVector)> =
        observations.iter().map(|(t, c, v)| (*t, *c, v)).collect();
    let spectrum = stitch_offsets(&refs).map_err(|e| anyhow::anyhow!("stitching: {e}"))?;

    let merged = spectrum.merged_with(|deposits| {
        let values: Vec<f64> = deposits.iter().map(|d| d.value).collect();
        circular_safe_median(&values)
    });
    let rows: Vec<String> = (0..GLOBAL_BIN_COUNT)
        .map(|g| {
            let value = merged[g].map(|v| format!("{v}")).unwrap_or_default();
            format!(
                "{g},{},{},{value}",
                global_bin_frequency_mhz(g),
                spectrum.coverage(g)
            )
        })
        .collect();
    write_csv(
        &ctx.out.join("stitched.csv"),
        "bin,frequency_mhz,coverage,merged_rad",
        &rows,
    )?;

    let report = overlap_consistency(&spectrum, tolerance);
    let rows: Vec<String> = report
        .bins
        .iter()
        .map(|b| {
            format!(
                "{},{},{},{},{}",
                b.bin,
                global_bin_frequency_mhz(b.bin),
                b.coverage,
                b.spread_rad,
                report.flagged.contains(&b.bin) as u8
            )
        })
        .collect();
    write_csv(
        &ctx.out.join("consistency.csv"),
        "bin,frequency_mhz,coverage,spread_rad,flagged",
        &rows,
    )?;

    ctx.persist(
        "stitch",
        &StitchParams {
            captures: captures.to_vec(),
            tolerance_rad: tolerance,
        },
    )?;

    let covered = (0..GLOBAL_BIN_COUNT)
        .filter(|&g| spectrum.coverage(g) > 0)
        .count();
    println!(
        "stitch: {covered}/{GLOBAL_BIN_COUNT} bins covered, {} multi-coverage bins checked, \
         {} flagged above {tolerance} rad",
        report.bins.len(),
        report.flagged.len()
    );
    Ok(())
}

//! Subcommand implementations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use csikit_core::format::read_capture_file;
use csikit_core::grid::GLOBAL_BIN_COUNT;
use csikit_core::model::{CaptureSet, CsiFrame, OffsetGrid, PhaseOffsetVector};

pub mod aoa;
pub mod correct;
pub mod plot;
pub mod report;
pub mod simulate;
pub mod stitch;

/// Reads capture files, attaching the file name to any parse error.
pub fn load_captures(paths: &[PathBuf]) -> Result<Vec<(PathBuf, CaptureSet)>> {
    if paths.is_empty() {
        bail!("no capture files given");
    }
    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        let set = read_capture_file(path)
            .with_context(|| format!("parsing capture {}", path.display()))?;
        out.push((path.clone(), set));
    }
    Ok(out)
}

/// Channel/packet filtering shared by correct and stitch: keeps frames
/// on the selected channels, at most `packets` per channel, in input
/// order.
pub fn select_frames<'a>(
    sets: &'a [(PathBuf, CaptureSet)],
    channels: Option<&[u16]>,
    packets: Option<usize>,
) -> Vec<&'a CsiFrame> {
    let mut per_channel = std::collections::BTreeMap::<u16, usize>::new();
    let mut out = Vec::new();
    for (_, set) in sets {
        for frame in &set.frames {
            if let Some(allowed) = channels {
                if !allowed.contains(&frame.channel_number) {
                    continue;
                }
            }
            let n = per_channel.entry(frame.channel_number).or_insert(0);
            if let Some(cap) = packets {
                if *n >= cap {
                    continue;
                }
            }
            *n += 1;
            out.push(frame);
        }
    }
    out
}

/// Loads a chip-offset calibration from either a `correction.csv` or a
/// `truth.toml` sidecar.
pub fn load_chip_offset(path: &Path) -> Result<PhaseOffsetVector> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => crate::sidecar::TruthSidecar::load(path)?.chip_offset_vector(),
        _ => {
            let table = crate::csvio::read_csv(path)?;
            let bin_col = table.require("bin", "chip offset")?;
            let value_col = table.require("corrected_rad", "chip offset")?;
            let mut values = vec![f64::NAN; GLOBAL_BIN_COUNT];
            let mut mask = vec![false; GLOBAL_BIN_COUNT];
            for row in &table.rows {
                let bin: usize = row[bin_col]
                    .parse()
                    .with_context(|| format!("bad bin `{}`", row[bin_col]))?;
                if bin >= GLOBAL_BIN_COUNT {
                    bail!("bin {bin} outside the global grid");
                }
                if row[value_col].is_empty() {
                    continue;
                }
                values[bin] = crate::csvio::parse_f64(&row[value_col], "corrected_rad")?;
                mask[bin] = true;
            }
            PhaseOffsetVector::new(OffsetGrid::Global, values, mask)
                .map_err(|e| anyhow::anyhow!("chip offset from {}: {e}", path.display()))
        }
    }
}

/// `{}` for measured values, empty field for masked bins.
pub fn field_or_empty(value: f64, measured: bool) -> String {
    if measured {
        format!("{value}")
    } else {
        String::new()
    }
}

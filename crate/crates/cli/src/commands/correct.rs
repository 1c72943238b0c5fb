//! `csikit correct`: the offset-correction pipeline over captures,
//! optionally pairing direct and swapped cable runs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context as _, Result};
use csikit_core::grid::{global_bin_frequency_mhz, GLOBAL_BIN_COUNT};
use csikit_core::model::{CsiFrame, SwapState};
use csikit_core::offsets::{
    circular_mean, circular_safe_median, correct_offsets, fill_outliers_linear_masked,
    swap_calibrate, wrap_to_pi, CorrectionReport, OffsetObservationSet,
};
use serde::Serialize;

use crate::commands::{field_or_empty, load_captures, select_frames};
use crate::config::{parse_channel_spec, Context};
use crate::csvio::write_csv;

#[derive(Debug, Serialize)]
struct CorrectParams {
    captures: Vec<PathBuf>,
    channels: Option<String>,
    packets: Option<usize>,
    swap: bool,
}

struct PipelineOutput {
    observations: OffsetObservationSet,
    report: CorrectionReport,
}

fn run_pipeline(frames: Vec<&CsiFrame>) -> Result<PipelineOutput> {
    if frames.is_empty() {
        bail!("no frames selected");
    }
    let observations = OffsetObservationSet::from_frames(&frames, 0)
        .map_err(|e| anyhow::anyhow!("offset extraction: {e}"))?;
    let report = correct_offsets(&observations).map_err(|e| anyhow::anyhow!("correction: {e}"))?;
    Ok(PipelineOutput {
        observations,
        report,
    })
}

/// Per-channel mean/median of the stage-1 filtered offsets, mirroring
/// the per-channel summary tables of cable characterizations.
fn per_channel_stats(pipeline: &PipelineOutput) -> Result<Vec<(u16, usize, f64, f64)>> {
    let mut per_channel: BTreeMap<u16, (usize, Vec<f64>)> = BTreeMap::new();
    for obs in pipeline.observations.observations() {
        let filtered = fill_outliers_linear_masked(&obs.offsets.values, &obs.offsets.mask)
            .map_err(|e| anyhow::anyhow!("channel {} stats: {e}", obs.channel))?;
        let entry = per_channel.entry(obs.channel).or_default();
        entry.0 = entry.0.max(obs.packet);
        for (g, _) in obs.offsets.measured() {
            entry.1.push(filtered.values[g]);
        }
    }
    Ok(per_channel
        .into_iter()
        .map(|(channel, (packets, values))| {
            let mean = circular_mean(values.iter().copied()).unwrap_or(f64::NAN);
            let median = circular_safe_median(&values);
            (channel, packets, mean, median)
        })
        .collect())
}

pub fn run(
    ctx: &Context,
    swap: bool,
    channels_flag: Option<&str>,
    packets_flag: Option<usize>,
    captures: &[PathBuf],
) -> Result<()> {
    let defaults = ctx.file.correct.clone().unwrap_or_default();
    let channel_spec = channels_flag.map(str::to_string).or(defaults.channels);
    let packets = packets_flag.or(defaults.packets);
    let channels = channel_spec
        .as_deref()
        .map(parse_channel_spec)
        .transpose()?;

    let sets = load_captures(captures)?;
    ctx.ensure_out()?;

    let mut summary = String::new();
    let (pipeline, corrected, stats) = if swap {
        let direct_sets: Vec<_> = sets
            .iter()
            .filter(|(_, s)| s.swap_state == SwapState::Direct)
            .cloned()
            .collect();
        let swapped_sets: Vec<_> = sets
            .iter()
            .filter(|(_, s)| s.swap_state == SwapState::Swapped)
            .cloned()
            .collect();
        if direct_sets.is_empty() || swapped_sets.is_empty() {
            bail!(
                "--swap needs both direct and swapped captures (found {} direct, {} swapped)",
                direct_sets.len(),
                swapped_sets.len()
            );
        }
        let direct = run_pipeline(select_frames(&direct_sets, channels.as_deref(), packets))
            .context("direct captures")?;
        let swapped = run_pipeline(select_frames(&swapped_sets, channels.as_deref(), packets))
            .context("swapped captures")?;
        let merged = swap_calibrate(&direct.report.corrected, &swapped.report.corrected)
            .map_err(|e| anyhow::anyhow!("swap calibration: {e}"))?;

        // ψ estimate: half the circular difference between the hookups.
        let mut psi = Vec::new();
        for g in 0..GLOBAL_BIN_COUNT {
            if direct.report.corrected.mask[g] && swapped.report.corrected.mask[g] {
                psi.push(
                    wrap_to_pi(
                        direct.report.corrected.values[g] - swapped.report.corrected.values[g],
                    ) / 2.0,
                );
            }
        }
        let psi_estimate = circular_mean(psi.iter().copied()).unwrap_or(f64::NAN);
        summary.push_str(&format!("cable_offset_estimate_rad={psi_estimate}\n"));
        summary.push_str(&format!(
            "residual_spread_rad_direct={}\nresidual_spread_rad_swapped={}\n",
            direct.report.residual_spread, swapped.report.residual_spread
        ));

        // Report sample counts summed over the two hookups.
        let mut report = direct.report.clone();
        report.corrected = merged;
        for g in 0..GLOBAL_BIN_COUNT {
            report.per_bin_sample_count[g] += swapped.report.per_bin_sample_count[g];
            report.per_bin_outlier_fraction[g] = 0.5
                * (direct.report.per_bin_outlier_fraction[g]
                    + swapped.report.per_bin_outlier_fraction[g]);
        }

        // Per-channel table with the cable term cancelled: circular
        // midpoint of the two hookups' per-channel statistics.
        let stats_direct = per_channel_stats(&direct)?;
        let stats_swapped = per_channel_stats(&swapped)?;
        let mut stats = Vec::new();
        for ((c, n_d, mean_d, median_d), (c2, n_s, mean_s, median_s)) in
            stats_direct.into_iter().zip(stats_swapped)
        {
            if c != c2 {
                bail!("--swap: direct and swapped captures cover different channels");
            }
            let midpoint = |a: f64, b: f64| {
                wrap_to_pi(
                    (num_complex::Complex64::from_polar(1.0, a)
                        + num_complex::Complex64::from_polar(1.0, b))
                    .arg(),
                )
            };
            stats.push((
                c,
                n_d + n_s,
                midpoint(mean_d, mean_s),
                midpoint(median_d, median_s),
            ));
        }

        let merged_pipeline = PipelineOutput {
            observations: direct.observations,
            report: report.clone(),
        };
        (merged_pipeline, report, stats)
    } else {
        let pipeline = run_pipeline(select_frames(&sets, channels.as_deref(), packets))?;
        let report = pipeline.report.clone();
        let stats = per_channel_stats(&pipeline)?;
        (pipeline, report, stats)
    };

    summary.push_str(&format!(
        "packets_per_channel={}\nchannels={}\nresidual_spread_rad={}\nmeasured_bins={}\n",
        pipeline.observations.packets_per_channel(),
        pipeline
            .observations
            .channels()
            .iter()
            .map(u16::to_string)
            .collect::<Vec<_>>()
            .join(","),
        corrected.residual_spread,
        corrected.corrected.measured_count(),
    ));

    // correction.csv: the final vector with coverage diagnostics.
    let rows: Vec<String> = (0..GLOBAL_BIN_COUNT)
        .map(|g| {
            format!(
                "{g},{},{},{},{}",
                global_bin_frequency_mhz(g),
                field_or_empty(corrected.corrected.values[g], corrected.corrected.mask[g]),
                corrected.per_bin_sample_count[g],
                corrected.per_bin_outlier_fraction[g]
            )
        })
        .collect();
    write_csv(
        &ctx.out.join("correction.csv"),
        "bin,frequency_mhz,corrected_rad,samples,outlier_fraction",
        &rows,
    )?;

    // channels.csv: per-channel summary in the style of a cable table.
    let rows: Vec<String> = stats
        .iter()
        .map(|(c, n, mean, median)| format!("{c},{n},{mean},{median}"))
        .collect();
    write_csv(
        &ctx.out.join("channels.csv"),
        "channel,packets,mean_rad,median_rad",
        &rows,
    )?;
    for (c, _, _, median) in &stats {
        summary.push_str(&format!("channel_{c}_median_rad={median}\n"));
    }

    // before_after.csv: up to five raw observations against the final
    // curve, for the correction-example figure.
    let mut rows = Vec::new();
    for (i, obs) in pipeline
        .observations
        .observations()
        .iter()
        .take(5)
        .enumerate()
    {
        for (g, v) in obs.offsets.measured() {
            rows.push(format!(
                "raw{},{g},{},{v}",
                i + 1,
                global_bin_frequency_mhz(g)
            ));
        }
    }
    for (g, v) in corrected.corrected.measured() {
        rows.push(format!("corrected,{g},{},{v}", global_bin_frequency_mhz(g)));
    }
    write_csv(
        &ctx.out.join("before_after.csv"),
        "series,bin,frequency_mhz,value_rad",
        &rows,
    )?;

    // raw_values.csv: every raw offset sample, for the distribution
    // figure.
    let mut rows = Vec::new();
    for obs in pipeline.observations.observations() {
        for (_, v) in obs.offsets.measured() {
            rows.push(format!("{v}"));
        }
    }
    write_csv(&ctx.out.join("raw_values.csv"), "value_rad", &rows)?;

    std::fs::write(ctx.out.join("summary.txt"), &summary).context("writing summary.txt")?;
    ctx.persist(
        "correct",
        &CorrectParams {
            captures: captures.to_vec(),
            channels: channel_spec,
            packets,
            swap,
        },
    )?;

    print!("{summary}");
    Ok(())
}

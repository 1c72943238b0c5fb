//! `csikit plot`: render toolkit CSVs into deterministic SVGs.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use serde::Serialize;

use crate::config::Context;
use crate::csvio::{parse_f64, read_csv};
use crate::svg;

#[derive(Debug, Serialize)]
struct PlotParams {
    kind: String,
    input: PathBuf,
}

pub fn run(ctx: &Context, kind: &str, input: &Path) -> Result<()> {
    let table = read_csv(input)?;
    let stem = input
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("plot")
        .to_string();

    let rendered = match kind {
        "offsets" => {
            let series_col = table.require("series", "offsets plot")?;
            let freq_col = table.require("frequency_mhz", "offsets plot")?;
            let value_col = table.require("value_rad", "offsets plot")?;
            let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            for row in &table.rows {
                let x = parse_f64(&row[freq_col], "frequency_mhz")?;
                let y = if row[value_col].is_empty() {
                    f64::NAN
                } else {
                    parse_f64(&row[value_col], "value_rad")?
                };
                series
                    .entry(row[series_col].clone())
                    .or_default()
                    .push((x, y));
            }
            let mut ordered: Vec<(String, Vec<(f64, f64)>)> = series.into_iter().collect();
            for (_, points) in ordered.iter_mut() {
                points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            }
            svg::line_plot(
                "phase offset vs subcarrier",
                "frequency_mhz",
                "offset_rad",
                &ordered,
            )
        }
        "histogram" => {
            let value_col = table.require("value_rad", "histogram plot")?;
            let values: Vec<f64> = table
                .rows
                .iter()
                .map(|row| parse_f64(&row[value_col], "value_rad"))
                .collect::<Result<_>>()?;
            svg::histogram("offset distribution", "offset_rad", &values, 64, (-PI, PI))
        }
        "heatmap" => {
            let theta_col = table.require("theta_deg", "heatmap plot")?;
            let tau_col = table.require("tau_ns", "heatmap plot")?;
            let power_col = table.require("power", "heatmap plot")?;
            let mut cells: BTreeMap<(i64, i64), f64> = BTreeMap::new();
            let quantize = |v: f64| (v * 1e6).round() as i64;
            let mut peak = (0.0f64, 0.0f64, f64::NEG_INFINITY);
            for row in &table.rows {
                let theta = parse_f64(&row[theta_col], "theta_deg")?;
                let tau = parse_f64(&row[tau_col], "tau_ns")?;
                let power = parse_f64(&row[power_col], "power")?;
                cells.insert((quantize(theta), quantize(tau)), power);
                if power > peak.2 {
                    peak = (tau, theta, power);
                }
            }
            let mut thetas: Vec<i64> = cells.keys().map(|&(t, _)| t).collect();
            thetas.sort_unstable();
            thetas.dedup();
            let mut taus: Vec<i64> = cells.keys().map(|&(_, u)| u).collect();
            taus.sort_unstable();
            taus.dedup();
            let grid: Vec<Vec<f64>> = thetas
                .iter()
                .map(|&t| {
                    taus.iter()
                        .map(|&u| cells.get(&(t, u)).copied().unwrap_or(0.0))
                        .collect()
                })
                .collect();
            let theta_values: Vec<f64> = thetas.iter().map(|&t| t as f64 / 1e6).collect();
            let tau_values: Vec<f64> = taus.iter().map(|&u| u as f64 / 1e6).collect();
            svg::heatmap(
                "MUSIC pseudospectrum",
                &tau_values,
                &theta_values,
                &grid,
                (peak.0, peak.1),
            )
        }
        other => bail!("unknown plot kind `{other}` (offsets | histogram | heatmap)"),
    };

    ctx.ensure_out()?;
    let out_path = ctx.out.join(format!("{stem}_{kind}.svg"));
    std::fs::write(&out_path, rendered)
        .with_context(|| format!("writing {}", out_path.display()))?;
    ctx.persist(
        "plot",
        &PlotParams {
            kind: kind.to_string(),
            input: input.to_path_buf(),
        },
    )?;
    println!("plot: wrote {}", out_path.display());
    Ok(())
}

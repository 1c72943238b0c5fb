//! `csikit aoa`: the full estimation pipeline over one scene (capture
//! files) or a batch of scene directories, with estimated-vs-truth
//! output when a sidecar is available.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use csikit_core::aoa::{estimate_aoa_endtoend, AoaPipelineParams, ModelOrder, SteeringModel};
use csikit_core::model::CaptureSet;
use serde::Serialize;

use crate::commands::{load_captures, load_chip_offset};
use crate::config::Context;
use crate::csvio::write_csv;
use crate::sidecar::{TruthSidecar, SIDECAR_FILE};

#[derive(Debug, Serialize)]
struct AoaParams {
    inputs: Vec<PathBuf>,
    num_paths: String,
    chip_offset: Option<PathBuf>,
    antenna_spacing_m: f64,
    smoothing_window: usize,
}

struct Scene {
    name: String,
    captures: Vec<CaptureSet>,
    sidecar: Option<TruthSidecar>,
}

fn scene_from_dir(dir: &Path) -> Result<Scene> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading scene directory {}", dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.ends_with(".csik") || name.ends_with(".csik.gz")
        })
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("scene directory {} has no .csik captures", dir.display());
    }
    let captures = load_captures(&files)?.into_iter().map(|(_, s)| s).collect();
    let sidecar_path = dir.join(SIDECAR_FILE);
    let sidecar = if sidecar_path.exists() {
        Some(TruthSidecar::load(&sidecar_path)?)
    } else {
        None
    };
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("scene")
        .replace(',', "_");
    Ok(Scene {
        name,
        captures,
        sidecar,
    })
}

fn resolve_order(spec: Option<&str>) -> Result<ModelOrder> {
    match spec {
        None => Ok(ModelOrder::Fixed(1)),
        Some("auto") => Ok(ModelOrder::EigenGap),
        Some(k) => {
            let k: usize = k
                .parse()
                .with_context(|| format!("bad --num-paths `{k}` (want K or auto)"))?;
            Ok(ModelOrder::Fixed(k))
        }
    }
}

pub fn run(
    ctx: &Context,
    num_paths_flag: Option<&str>,
    chip_flag: Option<&Path>,
    spacing: Option<f64>,
    window: Option<usize>,
    inputs: &[PathBuf],
) -> Result<()> {
    if inputs.is_empty() {
        bail!("aoa: no capture files or scene directories given");
    }
    let defaults = ctx.file.aoa.clone().unwrap_or_default();
    let order_spec = num_paths_flag.map(str::to_string).or(defaults.num_paths);
    let order = resolve_order(order_spec.as_deref())?;
    let chip_path = chip_flag.map(Path::to_path_buf).or(defaults.chip_offset);
    if let Some(p) = &chip_path {
        if !p.exists() {
            bail!("chip-offset file {} does not exist", p.display());
        }
    }

    let mut model: SteeringModel = ctx.file.steering_model()?;
    if let Some(d) = spacing {
        model.antenna_spacing_m = d;
    }
    if let Some(l) = window {
        model.smoothing_window = l;
    }
    model
        .validate()
        .map_err(|e| anyhow::anyhow!("steering model: {e}"))?;

    let all_dirs = inputs.iter().all(|p| p.is_dir());
    let scenes: Vec<Scene> = if all_dirs {
        inputs
            .iter()
            .map(|d| scene_from_dir(d))
            .collect::<Result<_>>()?
    } else if inputs.iter().any(|p| p.is_dir()) {
        bail!("aoa: mix of scene directories and capture files; pass one or the other");
    } else {
        let captures = load_captures(inputs)?.into_iter().map(|(_, s)| s).collect();
        vec![Scene {
            name: "scene".to_string(),
            captures,
            sidecar: None,
        }]
    };

    ctx.ensure_out()?;
    let explicit_chip = chip_path.as_deref().map(load_chip_offset).transpose()?;

    let mut estimate_rows = Vec::new();
    let mut summary = String::new();
    for scene in &scenes {
        let chip = match (&explicit_chip, &scene.sidecar) {
            (Some(v), _) => Some(v.clone()),
            (None, Some(sidecar)) => Some(sidecar.chip_offset_vector()?),
            (None, None) => None,
        };
        let params = AoaPipelineParams {
            chip_offset: chip,
            order,
            ..Default::default()
        };
        let result = estimate_aoa_endtoend(&scene.captures, &model, &params)
            .map_err(|e| anyhow::anyhow!("scene {}: {e}", scene.name))?;

        let truth = scene
            .sidecar
            .as_ref()
            .map(|s| format!("{}", s.dominant_aoa_deg))
            .unwrap_or_default();
        let slope = result
            .phase_slope_deg
            .map(|v| format!("{v}"))
            .unwrap_or_default();
        estimate_rows.push(format!(
            "{},{truth},{},{slope},{},{}",
            scene.name,
            result.music.peak_theta_deg,
            result.music.peak_tau_ns,
            result.music.eigen_ratio()
        ));
        summary.push_str(&format!(
            "scene={} peak_theta_deg={} peak_tau_ns={} eigen_ratio={} phase_slope_deg={} \
             cleaned_rotations={} residual_spread_rad={}\n",
            scene.name,
            result.music.peak_theta_deg,
            result.music.peak_tau_ns,
            result.music.eigen_ratio(),
            result
                .phase_slope_deg
                .map(|v| v.to_string())
                .unwrap_or_else(|| "NA".into()),
            result.cleaned_rotations,
            result.correction.residual_spread,
        ));

        // Pseudospectrum in long form for the heatmap plotter.
        let mut rows = Vec::with_capacity(model.theta_grid_deg.len() * model.tau_grid_ns.len());
        for (ti, row) in result.music.pseudospectrum.iter().enumerate() {
            for (ui, &p) in row.iter().enumerate() {
                rows.push(format!(
                    "{},{},{p}",
                    result.music.theta_grid_deg[ti], result.music.tau_grid_ns[ui]
                ));
            }
        }
        let name = if scenes.len() == 1 {
            "pseudospectrum.csv".to_string()
        } else {
            format!("pseudospectrum_{}.csv", scene.name)
        };
        write_csv(&ctx.out.join(name), "theta_deg,tau_ns,power", &rows)?;
    }

    write_csv(
        &ctx.out.join("estimates.csv"),
        "scene,truth_theta_deg,estimated_theta_deg,phase_slope_deg,peak_tau_ns,eigen_ratio",
        &estimate_rows,
    )?;
    std::fs::write(ctx.out.join("aoa_summary.txt"), &summary).context("writing aoa_summary.txt")?;
    ctx.persist(
        "aoa",
        &AoaParams {
            inputs: inputs.to_vec(),
            num_paths: order_spec.unwrap_or_else(|| "1".to_string()),
            chip_offset: chip_path,
            antenna_spacing_m: model.antenna_spacing_m,
            smoothing_window: model.smoothing_window,
        },
    )?;

    print!("{summary}");
    Ok(())
}

//! `csikit simulate`: synthetic captures with a ground-truth sidecar.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use csikit_core::format::write_capture_file;
use csikit_core::synth::{
    derive_seed, emulate_cable_setup, generate_multipath_csi, inject_pll_rotation, SceneSpec,
};
use serde::Serialize;

use crate::config::{parse_channel_spec, Context};
use crate::sidecar::TruthSidecar;

#[derive(Debug, Serialize)]
struct SimulateParams {
    scene: PathBuf,
    channels: String,
    packets: usize,
    seed: u64,
    swap: bool,
}

pub fn run(
    ctx: &Context,
    scene_flag: Option<&Path>,
    channels_flag: Option<&str>,
    packets_flag: Option<usize>,
    swap_flag: bool,
) -> Result<()> {
    let defaults = ctx.file.simulate.clone().unwrap_or_default();
    let scene_path = scene_flag
        .map(Path::to_path_buf)
        .or(defaults.scene)
        .context("simulate: no scene file (use --scene or the config)")?;
    let channel_spec = channels_flag
        .map(str::to_string)
        .or(defaults.channels)
        .unwrap_or_else(|| "1-13".to_string());
    let packets = packets_flag.or(defaults.packets).unwrap_or(20);
    let swap = swap_flag || defaults.swap;

    if packets == 0 {
        bail!("simulate: --packets must be >= 1");
    }
    let channels = parse_channel_spec(&channel_spec)?;

    let text = std::fs::read_to_string(&scene_path)
        .with_context(|| format!("reading scene {}", scene_path.display()))?;
    let mut scene = SceneSpec::from_toml(&text)
        .map_err(|e| anyhow::anyhow!("scene {}: {e}", scene_path.display()))?;
    if let Some(seed) = ctx.seed {
        scene.rng_seed = seed;
    }

    ctx.ensure_out()?;
    let truth = scene
        .true_chip_offset
        .truth_vector()
        .map_err(|e| anyhow::anyhow!("scene chip offset: {e}"))?;

    for &channel in &channels {
        let clean = generate_multipath_csi(&scene, channel, packets)
            .map_err(|e| anyhow::anyhow!("channel {channel}: {e}"))?;

        let hookups: &[bool] = if swap { &[false, true] } else { &[false] };
        for &swapped in hookups {
            let cabled = if scene.cable_offset_rad != 0.0 || swapped {
                emulate_cable_setup(&clean, scene.cable_offset_rad, swapped)
            } else {
                clean.clone()
            };
            let (corrupted, _) = inject_pll_rotation(
                &cabled,
                &truth,
                scene.corruption_prob,
                derive_seed(
                    scene.rng_seed,
                    channel as u64,
                    if swapped { 0xC1 } else { 0xC0 },
                ),
                scene.corruption_granularity,
            )
            .map_err(|e| anyhow::anyhow!("channel {channel}: {e}"))?;

            let name = if swapped {
                format!("ch{channel:02}_swapped.csik")
            } else {
                format!("ch{channel:02}.csik")
            };
            let path = ctx.out.join(&name);
            write_capture_file(&path, &corrupted)
                .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))?;
        }
    }

    TruthSidecar::new(&scene, &channels, packets)?.write(&ctx.out)?;
    ctx.persist(
        "simulate",
        &SimulateParams {
            scene: scene_path,
            channels: channel_spec,
            packets,
            seed: scene.rng_seed,
            swap,
        },
    )?;

    let file_count = channels.len() * if swap { 2 } else { 1 };
    println!(
        "simulate: {} packets on {} channel(s) -> {} capture file(s) in {}",
        packets,
        channels.len(),
        file_count,
        ctx.out.display()
    );
    Ok(())
}

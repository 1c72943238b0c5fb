//! Ground-truth sidecar written by `simulate` and consumed by `aoa`:
//! the full scene, the planted chip-offset table and the file map.

use std::fs;
use std::path::Path;

use anyhow::{Context as _, Result};
use csikit_core::grid::GLOBAL_BIN_COUNT;
use csikit_core::model::{OffsetGrid, PhaseOffsetVector};
use csikit_core::synth::SceneSpec;
use serde::{Deserialize, Serialize};

pub const SIDECAR_FILE: &str = "truth.toml";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthSidecar {
    pub scene: SceneSpec,
    pub channels: Vec<u16>,
    pub packets_per_channel: usize,
    /// Planted chip offset per global bin, wrapped.
    pub chip_offset_rad: Vec<f64>,
    /// Ground-truth angle: the strongest path's AoA.
    pub dominant_aoa_deg: f64,
}

impl TruthSidecar {
    pub fn new(scene: &SceneSpec, channels: &[u16], packets_per_channel: usize) -> Result<Self> {
        let truth = scene
            .true_chip_offset
            .truth_vector()
            .map_err(|e| anyhow::anyhow!("chip offset table: {e}"))?;
        let dominant = scene
            .paths
            .iter()
            .max_by(|a, b| {
                a.complex_gain
                    .norm()
                    .partial_cmp(&b.complex_gain.norm())
                    .unwrap()
            })
            .map(|p| p.aoa_deg)
            .unwrap_or(0.0);
        Ok(TruthSidecar {
            scene: scene.clone(),
            channels: channels.to_vec(),
            packets_per_channel,
            chip_offset_rad: truth.values,
            dominant_aoa_deg: dominant,
        })
    }

    pub fn chip_offset_vector(&self) -> Result<PhaseOffsetVector> {
        anyhow::ensure!(
            self.chip_offset_rad.len() == GLOBAL_BIN_COUNT,
            "sidecar chip table has {} bins, expected {GLOBAL_BIN_COUNT}",
            self.chip_offset_rad.len()
        );
        PhaseOffsetVector::dense(OffsetGrid::Global, self.chip_offset_rad.clone())
            .map_err(|e| anyhow::anyhow!("sidecar chip table: {e}"))
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self).context("serializing truth sidecar")?;
        fs::write(dir.join(SIDECAR_FILE), text).context("writing truth sidecar")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading sidecar {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing sidecar {}", path.display()))
    }
}

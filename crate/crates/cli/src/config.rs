//! Run configuration: a TOML file of per-command defaults that flags
//! override, plus the resolved context persisted next to the outputs
//! for provenance.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use csikit_core::aoa::SteeringModel;
use serde::{Deserialize, Serialize};

use crate::Cli;

pub const CONFIG_VERSION: u32 = 1;

/// Optional defaults loaded from `--config <path>`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub steering: Option<SteeringConfig>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub correct: Option<CorrectConfig>,
    #[serde(default)]
    pub aoa: Option<AoaConfig>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteeringConfig {
    pub antenna_spacing_m: Option<f64>,
    pub theta_min_deg: Option<f64>,
    pub theta_max_deg: Option<f64>,
    pub theta_step_deg: Option<f64>,
    pub tau_max_ns: Option<f64>,
    pub tau_step_ns: Option<f64>,
    pub smoothing_window: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub scene: Option<PathBuf>,
    pub channels: Option<String>,
    pub packets: Option<usize>,
    #[serde(default)]
    pub swap: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectConfig {
    pub channels: Option<String>,
    pub packets: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AoaConfig {
    pub num_paths: Option<String>,
    pub chip_offset: Option<PathBuf>,
}

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfigFile =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn steering_model(&self) -> Result<SteeringModel> {
        let mut model = SteeringModel::default();
        if let Some(s) = &self.steering {
            if let Some(d) = s.antenna_spacing_m {
                model.antenna_spacing_m = d;
            }
            let theta_min = s.theta_min_deg.unwrap_or(-45.0);
            let theta_max = s.theta_max_deg.unwrap_or(45.0);
            let theta_step = s.theta_step_deg.unwrap_or(0.5);
            let tau_max = s.tau_max_ns.unwrap_or(100.0);
            let tau_step = s.tau_step_ns.unwrap_or(1.0);
            if theta_step <= 0.0 || tau_step <= 0.0 || theta_max <= theta_min {
                bail!("steering config: degenerate search grid");
            }
            model.theta_grid_deg = grid_points(theta_min, theta_max, theta_step);
            model.tau_grid_ns = grid_points(0.0, tau_max, tau_step);
            if let Some(l) = s.smoothing_window {
                model.smoothing_window = l;
            }
        }
        model
            .validate()
            .map_err(|e| anyhow::anyhow!("steering config: {e}"))?;
        Ok(model)
    }
}

fn grid_points(min: f64, max: f64, step: f64) -> Vec<f64> {
    let n = ((max - min) / step).round() as usize;
    (0..=n).map(|i| min + step * i as f64).collect()
}

/// Resolved invocation context shared by all commands.
#[derive(Debug)]
pub struct Context {
    pub file: RunConfigFile,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

impl Context {
    pub fn resolve(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(path) => RunConfigFile::load(path)?,
            None => RunConfigFile::default(),
        };
        let out = cli
            .out
            .clone()
            .or_else(|| file.out.clone())
            .unwrap_or_else(|| PathBuf::from("csikit-out"));
        let seed = cli.seed.or(file.seed);
        Ok(Context { file, out, seed })
    }

    pub fn ensure_out(&self) -> Result<()> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("creating output directory {}", self.out.display()))
    }

    /// Persists the resolved per-command parameters next to the outputs.
    pub fn persist<P: Serialize>(&self, command: &str, params: &P) -> Result<()> {
        #[derive(Serialize)]
        struct Envelope<'a, P: Serialize> {
            version: u32,
            command: &'a str,
            params: &'a P,
        }
        let envelope = Envelope {
            version: CONFIG_VERSION,
            command,
            params,
        };
        let text = toml::to_string_pretty(&envelope).context("serializing run config")?;
        fs::write(self.out.join("config.toml"), text).context("writing config.toml")?;
        Ok(())
    }
}

/// Parses a channel spec like `1-13`, `6` or `1,6,11`.
pub fn parse_channel_spec(spec: &str) -> Result<Vec<u16>> {
    let mut channels = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if let Some((a, b)) = part.split_once('-') {
            let lo: u16 = a
                .trim()
                .parse()
                .with_context(|| format!("bad channel `{a}`"))?;
            let hi: u16 = b
                .trim()
                .parse()
                .with_context(|| format!("bad channel `{b}`"))?;
            if lo > hi {
                bail!("channel range {lo}-{hi} is reversed");
            }
            channels.extend(lo..=hi);
        } else {
            channels.push(
                part.parse()
                    .with_context(|| format!("bad channel `{part}`"))?,
            );
        }
    }
    if channels.is_empty() {
        bail!("channel spec `{spec}` selects nothing");
    }
    channels.sort_unstable();
    channels.dedup();
    Ok(channels)
}

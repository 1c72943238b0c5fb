//! Synthetic two-antenna CSI with known ground truth: far-field
//! multipath, a planted per-bin chip offset on antenna 1, per-packet
//! common phase (CFO/PDD surrogate), optional complex noise, the
//! semi-deterministic PLL π-rotation corruption and cable/splitter/swap
//! emulation.
//!
//! Everything is a pure function of (spec, seed): per-packet RNG streams
//! are derived with a splitmix64 chain, so parallel and serial
//! generation agree bit for bit.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{self, GLOBAL_BIN_COUNT};
use crate::model::{
    Band, CaptureSet, CsiFrame, ModelError, OffsetGrid, PhaseOffsetVector, SwapState,
    HT20_SUBCARRIER_COUNT,
};
use crate::offsets::wrap_to_pi;
use crate::SPEED_OF_LIGHT_M_S;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene has no propagation paths")]
    EmptyPaths,
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("corruption probability {0} outside [0, 1]")]
    InvalidCorruptionProb(f64),
    #[error("frames must have exactly 2 rx antennas, found {0}")]
    NotTwoAntennas(usize),
    #[error("true offsets do not cover channel {channel} subcarrier slot {slot}")]
    TruthNotCovering { channel: u16, slot: usize },
    #[error(
        "true offsets on channel-local grid {grid_channel} cannot corrupt channel {frame_channel}"
    )]
    TruthChannelMismatch {
        grid_channel: u16,
        frame_channel: u16,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] grid::GridError),
}

/// One propagation path of the synthetic channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    /// Complex path gain; serialized as `[re, im]`.
    pub complex_gain: Complex64,
    /// Angle of arrival relative to array broadside, −90..90.
    pub aoa_deg: f64,
    /// Excess delay in nanoseconds.
    pub delay_ns: f64,
}

/// Planted chip offset φ over the composite grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChipOffsetModel {
    Constant {
        value_rad: f64,
    },
    /// Linear in bin index from bin 0 to bin 248.
    LinearRamp {
        start_rad: f64,
        end_rad: f64,
    },
    Table {
        values_rad: Vec<f64>,
    },
}

impl ChipOffsetModel {
    pub fn value_at(&self, bin: usize) -> f64 {
        match self {
            ChipOffsetModel::Constant { value_rad } => *value_rad,
            ChipOffsetModel::LinearRamp { start_rad, end_rad } => {
                start_rad + (end_rad - start_rad) * bin as f64 / (GLOBAL_BIN_COUNT - 1) as f64
            }
            ChipOffsetModel::Table { values_rad } => values_rad[bin],
        }
    }

    /// The planted truth as a dense global-grid vector.
    pub fn truth_vector(&self) -> Result<PhaseOffsetVector, ModelError> {
        let values: Vec<f64> = (0..GLOBAL_BIN_COUNT)
            .map(|g| wrap_to_pi(self.value_at(g)))
            .collect();
        PhaseOffsetVector::dense(OffsetGrid::Global, values)
    }
}

/// Whether corruption draws are shared by a whole packet or independent
/// per subcarrier. Real hardware shows both patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    PerPacket,
    PerSubcarrier,
}

fn default_spacing() -> f64 {
    0.09
}

/// Full synthetic scene: multipath ground truth plus corruption and
/// cable parameters. Loadable from a TOML scene file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub paths: Vec<PathSpec>,
    #[serde(default = "default_spacing")]
    pub antenna_spacing_m: f64,
    pub true_chip_offset: ChipOffsetModel,
    /// Differential phase ψ added by cables/splitters on antenna 1.
    #[serde(default)]
    pub cable_offset_rad: f64,
    #[serde(default)]
    pub corruption_prob: f64,
    #[serde(default = "default_granularity")]
    pub corruption_granularity: Granularity,
    /// Std-dev of each quadrature component of the additive complex
    /// Gaussian noise per gain entry.
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_granularity() -> Granularity {
    Granularity::PerSubcarrier
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.paths.is_empty() {
            return Err(SceneError::EmptyPaths);
        }
        for (i, p) in self.paths.iter().enumerate() {
            let gain2 = p.complex_gain.norm_sqr();
            if gain2 == 0.0 || gain2.is_nan() {
                return Err(SceneError::InvalidScene(format!("path {i}: zero gain")));
            }
            if !p.delay_ns.is_finite() || p.delay_ns < 0.0 {
                return Err(SceneError::InvalidScene(format!(
                    "path {i}: delay {} ns",
                    p.delay_ns
                )));
            }
            if !(-90.0..=90.0).contains(&p.aoa_deg) {
                return Err(SceneError::InvalidScene(format!(
                    "path {i}: aoa {}",
                    p.aoa_deg
                )));
            }
        }
        if self.antenna_spacing_m <= 0.0 || !self.antenna_spacing_m.is_finite() {
            return Err(SceneError::InvalidScene(format!(
                "antenna spacing {} m",
                self.antenna_spacing_m
            )));
        }
        if !(0.0..=1.0).contains(&self.corruption_prob) {
            return Err(SceneError::InvalidCorruptionProb(self.corruption_prob));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(SceneError::InvalidScene(format!(
                "noise std {}",
                self.noise_std
            )));
        }
        if let ChipOffsetModel::Table { values_rad } = &self.true_chip_offset {
            if values_rad.len() != GLOBAL_BIN_COUNT {
                return Err(SceneError::InvalidScene(format!(
                    "chip offset table has {} bins, expected {GLOBAL_BIN_COUNT}",
                    values_rad.len()
                )));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, SceneError> {
        let scene: SceneSpec =
            toml::from_str(text).map_err(|e| SceneError::InvalidScene(e.to_string()))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scene serialization cannot fail")
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed for (base, a, b).
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(a)) ^ b)
}

fn standard_normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // Box-Muller; u1 bounded away from 0 keeps ln finite.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    (r * (TAU * u2).cos(), r * (TAU * u2).sin())
}

/// Far-field narrowband ULA phase for antenna `m` at frequency `f`:
/// `−2π · d · m · sin(θ) · f / c`.
fn array_phase(spacing_m: f64, antenna: usize, aoa_deg: f64, frequency_hz: f64) -> f64 {
    -TAU * spacing_m * antenna as f64 * aoa_deg.to_radians().sin() * frequency_hz
        / SPEED_OF_LIGHT_M_S
}

/// Generates `num_packets` HT20 packets on a 2.4 GHz channel.
///
/// Antenna 1 is additionally rotated by the planted chip offset at each
/// bin; a per-packet random phase common to both antennas models
/// CFO/PDD, which cancels in the antenna ratio.
pub fn generate_multipath_csi(
    scene: &SceneSpec,
    channel_number: u16,
    num_packets: usize,
) -> Result<CaptureSet, SceneError> {
    scene.validate()?;
    if num_packets == 0 {
        return Err(SceneError::InvalidScene("num_packets must be >= 1".into()));
    }
    let center_mhz = crate::model::channel_center_frequency(Band::Band24, channel_number)?;
    let indices = crate::model::ht20_subcarrier_indices();

    let mut frames = Vec::with_capacity(num_packets);
    for t in 0..num_packets {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(scene.rng_seed, channel_number as u64, t as u64));
        let common = Complex64::from_polar(1.0, wrap_to_pi(rng.gen::<f64>() * TAU));

        let mut gains: Vec<Vec<Complex64>> = (0..2)
            .map(|_| Vec::with_capacity(HT20_SUBCARRIER_COUNT))
            .collect();
        for (antenna, row) in gains.iter_mut().enumerate() {
            for &k in &indices {
                let f_hz = (center_mhz + k as f64 * crate::model::SUBCARRIER_SPACING_MHZ) * 1e6;
                let mut h = Complex64::new(0.0, 0.0);
                for p in &scene.paths {
                    let delay_phase = -TAU * f_hz * p.delay_ns * 1e-9;
                    let steering = array_phase(scene.antenna_spacing_m, antenna, p.aoa_deg, f_hz);
                    h += p.complex_gain * Complex64::from_polar(1.0, delay_phase + steering);
                }
                if antenna == 1 {
                    let g = grid::global_index(channel_number, k)?;
                    h *= Complex64::from_polar(1.0, scene.true_chip_offset.value_at(g));
                }
                row.push(h * common);
            }
        }

        if scene.noise_std > 0.0 {
            for row in gains.iter_mut() {
                for h in row.iter_mut() {
                    let (re, im) = standard_normal_pair(&mut rng);
                    *h += Complex64::new(scene.noise_std * re, scene.noise_std * im);
                }
            }
        }

        frames.push(CsiFrame::new(
            Band::Band24,
            channel_number,
            t as u64 * 1000,
            gains,
            None,
        )?);
    }

    Ok(CaptureSet::new(
        frames,
        format!("ch{channel_number}"),
        SwapState::OverAir,
    )?)
}

/// One recorded corruption draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RotationEvent {
    pub frame_index: usize,
    /// Subcarrier layout slot, or `None` for a whole-packet rotation.
    pub slot: Option<usize>,
    /// The drawn rotation multiple n (φ̂ = φ + nπ).
    pub n: i8,
}

impl RotationEvent {
    /// Whether this draw flips the measured phase (odd n); ±2π draws
    /// are invisible after wrapping.
    pub fn is_odd(&self) -> bool {
        self.n.rem_euclid(2) == 1
    }
}

/// Non-zero rotation multiples for a planted offset sign, mirroring the
/// asymmetric hardware sets: {−2,−1,1} for φ ≥ 0 and {−1,1,2} for φ < 0.
fn nonzero_rotations(phi: f64) -> [i8; 3] {
    if phi >= 0.0 {
        [-2, -1, 1]
    } else {
        [-1, 1, 2]
    }
}

/// `exp(j·n·π)` evaluated exactly: ±1.
fn rotation_multiplier(n: i8) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Injects random PLL π-rotations into antenna 1.
///
/// With probability `corruption_prob` per unit (packet or subcarrier)
/// the gain is multiplied by `exp(j·n·π)` with `n` drawn uniformly from
/// the non-zero rotation set for the planted offset's sign. Returns the
/// corrupted set together with the draw log.
pub fn inject_pll_rotation(
    set: &CaptureSet,
    true_offsets: &PhaseOffsetVector,
    corruption_prob: f64,
    rng_seed: u64,
    granularity: Granularity,
) -> Result<(CaptureSet, Vec<RotationEvent>), SceneError> {
    if !(0.0..=1.0).contains(&corruption_prob) {
        return Err(SceneError::InvalidCorruptionProb(corruption_prob));
    }
    if let Some(m) = set.num_rx_antennas() {
        if m != 2 {
            return Err(SceneError::NotTwoAntennas(m));
        }
    }

    // Planted offset for (frame, slot), honoring the truth grid.
    let planted = |frame: &CsiFrame, slot: usize| -> Result<f64, SceneError> {
        let bin = match true_offsets.grid {
            OffsetGrid::Global => {
                grid::global_index(frame.channel_number, frame.subcarrier_indices[slot])?
            }
            OffsetGrid::ChannelLocal(c) => {
                if c != frame.channel_number {
                    return Err(SceneError::TruthChannelMismatch {
                        grid_channel: c,
                        frame_channel: frame.channel_number,
                    });
                }
                slot
            }
        };
        if !true_offsets.mask[bin] {
            return Err(SceneError::TruthNotCovering {
                channel: frame.channel_number,
                slot,
            });
        }
        Ok(true_offsets.values[bin])
    };

    let mut out = set.clone();
    let mut log = Vec::new();
    for (frame_index, frame) in out.frames.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rng_seed, frame_index as u64, 1));
        match granularity {
            Granularity::PerPacket => {
                if rng.gen_bool(corruption_prob) {
                    let phi = planted(frame, 0)?;
                    let n = nonzero_rotations(phi)[rng.gen_range(0..3)];
                    let mult = rotation_multiplier(n);
                    for h in frame.gains[1].iter_mut() {
                        *h *= mult;
                    }
                    log.push(RotationEvent {
                        frame_index,
                        slot: None,
                        n,
                    });
                }
            }
            Granularity::PerSubcarrier => {
                for slot in 0..frame.subcarrier_indices.len() {
                    if rng.gen_bool(corruption_prob) {
                        let phi = planted(frame, slot)?;
                        let n = nonzero_rotations(phi)[rng.gen_range(0..3)];
                        frame.gains[1][slot] *= rotation_multiplier(n);
                        log.push(RotationEvent {
                            frame_index,
                            slot: Some(slot),
                            n,
                        });
                    }
                }
            }
        }
    }
    Ok((out, log))
}

/// Applies the cable/splitter differential ψ to antenna 1: `exp(+jψ)`
/// for the direct hookup, `exp(−jψ)` when the external cables are
/// swapped. The returned set's swap state records the hookup.
pub fn emulate_cable_setup(set: &CaptureSet, cable_offset_rad: f64, swapped: bool) -> CaptureSet {
    let psi = if swapped {
        -cable_offset_rad
    } else {
        cable_offset_rad
    };
    let mult = Complex64::from_polar(1.0, psi);
    let mut out = set.clone();
    for frame in out.frames.iter_mut() {
        if frame.num_rx_antennas < 2 {
            continue;
        }
        for h in frame.gains[1].iter_mut() {
            *h *= mult;
        }
    }
    out.swap_state = if swapped {
        SwapState::Swapped
    } else {
        SwapState::Direct
    };
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offsets::extract_phase_offset;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn single_path_scene(aoa_deg: f64) -> SceneSpec {
        SceneSpec {
            paths: vec![PathSpec {
                complex_gain: Complex64::new(1.0, 0.0),
                aoa_deg,
                delay_ns: 0.0,
            }],
            antenna_spacing_m: 0.09,
            true_chip_offset: ChipOffsetModel::Constant { value_rad: 0.0 },
            cable_offset_rad: 0.0,
            corruption_prob: 0.0,
            corruption_granularity: Granularity::PerSubcarrier,
            noise_std: 0.0,
            rng_seed: 7,
        }
    }

    #[test]
    fn broadside_has_zero_interantenna_phase() {
        let set = generate_multipath_csi(&single_path_scene(0.0), 6, 2).unwrap();
        for frame in &set.frames {
            let v = extract_phase_offset(frame, 0).unwrap();
            for (_, x) in v.measured() {
                assert_abs_diff_eq!(x, 0.0, epsilon = 1e-12);
            }
        }
    }

    /// The planted steering phase must match the closed form
    /// −2π·d·sin(θ)·f/c at every bin.
    #[test]
    fn steering_phase_matches_closed_form() {
        let scene = single_path_scene(19.0);
        let set = generate_multipath_csi(&scene, 6, 1).unwrap();
        let frame = &set.frames[0];
        let v = extract_phase_offset(frame, 0).unwrap();
        for (slot, x) in v.measured() {
            let f = frame.subcarrier_frequency_hz(slot);
            let expect =
                wrap_to_pi(-TAU * 0.09 * 19f64.to_radians().sin() * f / SPEED_OF_LIGHT_M_S);
            assert_abs_diff_eq!(x, expect, epsilon = 1e-9);
        }
        // Frozen value of the closed form at the channel-6 carrier.
        let at_center = -TAU * 0.09 * 19f64.to_radians().sin() * 2.437e9 / SPEED_OF_LIGHT_M_S;
        assert_abs_diff_eq!(at_center, -1.4965395, epsilon = 5e-7);
    }

    #[test]
    fn opposite_paths_cancel_interantenna_phase() {
        let mut scene = single_path_scene(10.0);
        scene.paths.push(PathSpec {
            complex_gain: Complex64::new(1.0, 0.0),
            aoa_deg: -10.0,
            delay_ns: 0.0,
        });
        let set = generate_multipath_csi(&scene, 1, 1).unwrap();
        let v = extract_phase_offset(&set.frames[0], 0).unwrap();
        for (_, x) in v.measured() {
            assert_abs_diff_eq!(x, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn planted_chip_offset_appears_in_extraction() {
        let mut scene = single_path_scene(0.0);
        scene.true_chip_offset = ChipOffsetModel::LinearRamp {
            start_rad: -0.17,
            end_rad: -0.08,
        };
        let set = generate_multipath_csi(&scene, 3, 1).unwrap();
        let frame = &set.frames[0];
        let v = extract_phase_offset(frame, 0).unwrap();
        for (slot, x) in v.measured() {
            let g =
                grid::global_index(frame.channel_number, frame.subcarrier_indices[slot]).unwrap();
            assert_abs_diff_eq!(x, scene.true_chip_offset.value_at(g), epsilon = 1e-9);
        }
    }

    #[test]
    fn common_packet_phase_cancels_in_extraction() {
        // With zero noise, packets differ only by their common phase.
        let set = generate_multipath_csi(&single_path_scene(19.0), 6, 5).unwrap();
        let reference = extract_phase_offset(&set.frames[0], 0).unwrap();
        for frame in &set.frames[1..] {
            let v = extract_phase_offset(frame, 0).unwrap();
            for ((_, a), (_, b)) in v.measured().zip(reference.measured()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let scene = SceneSpec {
            noise_std: 0.05,
            corruption_prob: 0.0,
            ..single_path_scene(5.0)
        };
        let a = generate_multipath_csi(&scene, 9, 4).unwrap();
        let b = generate_multipath_csi(&scene, 9, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_paths_is_invalid() {
        let mut scene = single_path_scene(0.0);
        scene.paths.clear();
        assert!(matches!(
            generate_multipath_csi(&scene, 1, 1),
            Err(SceneError::EmptyPaths)
        ));
    }

    #[test]
    fn inject_with_zero_probability_is_identity() {
        let scene = single_path_scene(0.0);
        let set = generate_multipath_csi(&scene, 2, 3).unwrap();
        let truth = scene.true_chip_offset.truth_vector().unwrap();
        let (out, log) =
            inject_pll_rotation(&set, &truth, 0.0, 99, Granularity::PerSubcarrier).unwrap();
        assert_eq!(out, set);
        assert!(log.is_empty());
    }

    #[test]
    fn rotation_arithmetic_examples() {
        // φ = +0.1 rotated by n = −2 is invisible after wrapping; n = −1
        // lands at 0.1 − π.
        let phi = 0.1;
        assert_abs_diff_eq!(wrap_to_pi(phi - 2.0 * PI), phi, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_to_pi(phi - PI), -3.0415926, epsilon = 1e-6);

        let mut scene = single_path_scene(0.0);
        scene.true_chip_offset = ChipOffsetModel::Constant { value_rad: phi };
        let set = generate_multipath_csi(&scene, 1, 1).unwrap();
        let truth = scene.true_chip_offset.truth_vector().unwrap();
        let (out, log) =
            inject_pll_rotation(&set, &truth, 1.0, 3, Granularity::PerSubcarrier).unwrap();
        assert_eq!(log.len(), HT20_SUBCARRIER_COUNT);
        let v = extract_phase_offset(&out.frames[0], 0).unwrap();
        for event in &log {
            let slot = event.slot.unwrap();
            let expect = if event.is_odd() {
                wrap_to_pi(phi - PI)
            } else {
                phi
            };
            assert_abs_diff_eq!(v.values[slot], expect, epsilon = 1e-9);
            assert!(nonzero_rotations(phi).contains(&event.n));
        }
    }

    #[test]
    fn per_packet_rotation_moves_all_subcarriers_together() {
        let mut scene = single_path_scene(0.0);
        scene.true_chip_offset = ChipOffsetModel::Constant { value_rad: 0.05 };
        let set = generate_multipath_csi(&scene, 5, 40).unwrap();
        let truth = scene.true_chip_offset.truth_vector().unwrap();
        let (out, log) =
            inject_pll_rotation(&set, &truth, 0.5, 11, Granularity::PerPacket).unwrap();
        assert!(!log.is_empty());
        for event in &log {
            assert_eq!(event.slot, None);
            let v = extract_phase_offset(&out.frames[event.frame_index], 0).unwrap();
            let expect = if event.is_odd() {
                wrap_to_pi(0.05 - PI)
            } else {
                0.05
            };
            for (_, x) in v.measured() {
                assert_abs_diff_eq!(x, expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn corruption_rate_tracks_probability() {
        let mut scene = single_path_scene(0.0);
        scene.true_chip_offset = ChipOffsetModel::Constant { value_rad: 0.1 };
        // 180 packets × 56 bins = 10080 draws.
        let set = generate_multipath_csi(&scene, 7, 180).unwrap();
        let truth = scene.true_chip_offset.truth_vector().unwrap();
        let p = 0.3;
        let (_, log) =
            inject_pll_rotation(&set, &truth, p, 1234, Granularity::PerSubcarrier).unwrap();
        let total = 180 * HT20_SUBCARRIER_COUNT;
        let fraction = log.len() as f64 / total as f64;
        assert!(
            (fraction - p).abs() <= 0.02,
            "corrupted fraction {fraction} vs p={p}"
        );
        // Roughly two thirds of the draws are odd (visible) rotations.
        let odd = log.iter().filter(|e| e.is_odd()).count() as f64 / log.len() as f64;
        assert!((odd - 2.0 / 3.0).abs() < 0.05, "odd fraction {odd}");
    }

    #[test]
    fn cable_sign_convention() {
        let mut scene = single_path_scene(0.0);
        scene.true_chip_offset = ChipOffsetModel::Constant { value_rad: 0.0 };
        let clean = generate_multipath_csi(&scene, 1, 1).unwrap();

        let direct = emulate_cable_setup(&clean, 0.3, false);
        assert_eq!(direct.swap_state, SwapState::Direct);
        let vd = extract_phase_offset(&direct.frames[0], 0).unwrap();
        for (_, x) in vd.measured() {
            assert_abs_diff_eq!(x, 0.3, epsilon = 1e-12);
        }

        let swapped = emulate_cable_setup(&clean, 0.3, true);
        assert_eq!(swapped.swap_state, SwapState::Swapped);
        let vs = extract_phase_offset(&swapped.frames[0], 0).unwrap();
        for (_, x) in vs.measured() {
            assert_abs_diff_eq!(x, -0.3, epsilon = 1e-12);
        }

        let identity = emulate_cable_setup(&clean, 0.0, false);
        assert_eq!(identity.frames, clean.frames);
    }

    #[test]
    fn scene_toml_roundtrip() {
        let mut scene = single_path_scene(12.0);
        scene.true_chip_offset = ChipOffsetModel::LinearRamp {
            start_rad: -0.17,
            end_rad: -0.08,
        };
        scene.corruption_prob = 0.25;
        scene.noise_std = 0.01;
        let text = scene.to_toml();
        let parsed = SceneSpec::from_toml(&text).unwrap();
        assert_eq!(parsed, scene);
    }
}

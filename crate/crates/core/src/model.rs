//! Domain types for CSI captures plus channelization arithmetic and
//! frame validation.
//!
//! Everything here is immutable after construction and safe to share
//! across threads.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of used subcarriers in an HT20 channel (DC excluded).
pub const HT20_SUBCARRIER_COUNT: usize = 56;

/// Subcarrier spacing in MHz (312.5 kHz).
pub const SUBCARRIER_SPACING_MHZ: f64 = 0.3125;

/// Largest antenna count the capture format accepts. All estimators in
/// this crate are specified for the two-chain case.
pub const MAX_RX_ANTENNAS: usize = 8;

/// The canonical HT20 subcarrier indices: −28..−1, 1..28.
pub fn ht20_subcarrier_indices() -> Vec<i8> {
    (-28..=28).filter(|&k| k != 0).collect()
}

/// Position of subcarrier index `k` within the 56-entry frame layout,
/// or `None` for DC / out-of-range indices.
pub fn ht20_slot(k: i8) -> Option<usize> {
    match k {
        -28..=-1 => Some((k + 28) as usize),
        1..=28 => Some((k + 27) as usize),
        _ => None,
    }
}

/// WiFi band of a capture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Band {
    /// 2.4 GHz ISM band, channels 1–13.
    Band24,
    /// 5 GHz band, channels 36–64 and 100–165.
    Band5,
}

/// Cabling state of a capture, used by swap calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapState {
    Direct,
    Swapped,
    OverAir,
}

impl SwapState {
    pub fn as_str(self) -> &'static str {
        match self {
            SwapState::Direct => "direct",
            SwapState::Swapped => "swapped",
            SwapState::OverAir => "over_air",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "direct" => Some(SwapState::Direct),
            "swapped" => Some(SwapState::Swapped),
            "over_air" => Some(SwapState::OverAir),
            _ => None,
        }
    }
}

/// Errors from domain-type construction and channelization.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid channel {channel} for {band:?}")]
    InvalidChannel { band: Band, channel: u16 },
    #[error("frame is invalid: {0}")]
    InvalidFrame(Violation),
    #[error("capture set mixes antenna counts ({first} vs {other})")]
    MixedAntennaCounts { first: usize, other: usize },
    #[error("phase offset vector: {0}")]
    InvalidOffsetVector(String),
}

/// Center frequency in MHz for a (band, channel) pair.
///
/// 2.4 GHz: `2407 + 5·ch` for channels 1–13; 5 GHz: `5000 + 5·ch` for
/// channels 36–64 and 100–165.
pub fn channel_center_frequency(band: Band, channel: u16) -> Result<f64, ModelError> {
    let valid = match band {
        Band::Band24 => (1..=13).contains(&channel),
        Band::Band5 => (36..=64).contains(&channel) || (100..=165).contains(&channel),
    };
    if !valid {
        return Err(ModelError::InvalidChannel { band, channel });
    }
    let base = match band {
        Band::Band24 => 2407.0,
        Band::Band5 => 5000.0,
    };
    Ok(base + 5.0 * channel as f64)
}

/// One packet's channel estimate: a complex gain per (rx antenna,
/// subcarrier) plus channel and band metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiFrame {
    pub band: Band,
    pub channel_number: u16,
    pub center_frequency_mhz: f64,
    pub bandwidth_mhz: u32,
    pub timestamp_us: u64,
    pub num_rx_antennas: usize,
    pub subcarrier_indices: Vec<i8>,
    /// Row per rx antenna, column per subcarrier (56 columns).
    pub gains: Vec<Vec<Complex64>>,
    pub rssi_dbm: Option<f64>,
}

impl CsiFrame {
    /// Builds a frame on the canonical HT20 grid and validates it.
    pub fn new(
        band: Band,
        channel_number: u16,
        timestamp_us: u64,
        gains: Vec<Vec<Complex64>>,
        rssi_dbm: Option<f64>,
    ) -> Result<Self, ModelError> {
        let center_frequency_mhz = channel_center_frequency(band, channel_number)?;
        let frame = CsiFrame {
            band,
            channel_number,
            center_frequency_mhz,
            bandwidth_mhz: 20,
            timestamp_us,
            num_rx_antennas: gains.len(),
            subcarrier_indices: ht20_subcarrier_indices(),
            gains,
            rssi_dbm,
        };
        match validate_frame(&frame).into_iter().next() {
            None => Ok(frame),
            Some(v) => Err(ModelError::InvalidFrame(v)),
        }
    }

    /// Frequency of the subcarrier at layout slot `slot`, in MHz.
    pub fn subcarrier_frequency_mhz(&self, slot: usize) -> f64 {
        self.center_frequency_mhz + self.subcarrier_indices[slot] as f64 * SUBCARRIER_SPACING_MHZ
    }

    /// Same, in Hz. The steering and delay models work in Hz.
    pub fn subcarrier_frequency_hz(&self, slot: usize) -> f64 {
        self.subcarrier_frequency_mhz(slot) * 1e6
    }
}

/// A single violated frame invariant. Violations are data, not panics:
/// [`validate_frame`] reports all of them.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DcSubcarrierPresent,
    SubcarrierCount { found: usize },
    SubcarrierOrder,
    GainShapeMismatch { rows: usize, cols: Option<usize> },
    NonFiniteGain { antenna: usize, slot: usize },
    CenterFrequencyMismatch { expected: f64, found: f64 },
    AntennaCount { found: usize },
    InvalidChannel { band: Band, channel: u16 },
    BandwidthUnsupported { found: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DcSubcarrierPresent => write!(f, "DC subcarrier present"),
            Violation::SubcarrierCount { found } => {
                write!(
                    f,
                    "subcarrier count {found}, expected {HT20_SUBCARRIER_COUNT}"
                )
            }
            Violation::SubcarrierOrder => write!(f, "subcarrier indices not strictly increasing"),
            Violation::GainShapeMismatch { rows, cols } => match cols {
                Some(c) => write!(f, "gain matrix shape mismatch: {rows}\u{d7}{c}"),
                None => write!(f, "gain matrix shape mismatch: ragged rows ({rows})"),
            },
            Violation::NonFiniteGain { antenna, slot } => {
                write!(f, "non-finite gain at antenna {antenna}, slot {slot}")
            }
            Violation::CenterFrequencyMismatch { expected, found } => {
                write!(
                    f,
                    "center frequency {found} MHz inconsistent, expected {expected} MHz"
                )
            }
            Violation::AntennaCount { found } => {
                write!(f, "antenna count {found} outside 1..={MAX_RX_ANTENNAS}")
            }
            Violation::InvalidChannel { band, channel } => {
                write!(f, "invalid channel {channel} for {band:?}")
            }
            Violation::BandwidthUnsupported { found } => {
                write!(f, "bandwidth {found} MHz unsupported, only 20 MHz")
            }
        }
    }
}

/// Checks every [`CsiFrame`] invariant; the report is empty iff the
/// frame is well formed.
pub fn validate_frame(frame: &CsiFrame) -> Vec<Violation> {
    let mut out = Vec::new();

    if frame.num_rx_antennas == 0 || frame.num_rx_antennas > MAX_RX_ANTENNAS {
        out.push(Violation::AntennaCount {
            found: frame.num_rx_antennas,
        });
    }
    if frame.bandwidth_mhz != 20 {
        out.push(Violation::BandwidthUnsupported {
            found: frame.bandwidth_mhz,
        });
    }

    if frame.subcarrier_indices.contains(&0) {
        out.push(Violation::DcSubcarrierPresent);
    }
    if frame.subcarrier_indices.len() != HT20_SUBCARRIER_COUNT {
        out.push(Violation::SubcarrierCount {
            found: frame.subcarrier_indices.len(),
        });
    }
    if frame.subcarrier_indices.windows(2).any(|w| w[0] >= w[1]) {
        out.push(Violation::SubcarrierOrder);
    }

    let rows = frame.gains.len();
    let ragged = frame.gains.windows(2).any(|w| w[0].len() != w[1].len());
    let cols = frame.gains.first().map(|r| r.len());
    if ragged {
        out.push(Violation::GainShapeMismatch { rows, cols: None });
    } else if rows != frame.num_rx_antennas || cols != Some(HT20_SUBCARRIER_COUNT) {
        out.push(Violation::GainShapeMismatch { rows, cols });
    }
    for (a, row) in frame.gains.iter().enumerate() {
        for (s, g) in row.iter().enumerate() {
            if !g.re.is_finite() || !g.im.is_finite() {
                out.push(Violation::NonFiniteGain {
                    antenna: a,
                    slot: s,
                });
            }
        }
    }

    match channel_center_frequency(frame.band, frame.channel_number) {
        Ok(expected) => {
            if (expected - frame.center_frequency_mhz).abs() > 1e-9 {
                out.push(Violation::CenterFrequencyMismatch {
                    expected,
                    found: frame.center_frequency_mhz,
                });
            }
        }
        Err(_) => out.push(Violation::InvalidChannel {
            band: frame.band,
            channel: frame.channel_number,
        }),
    }

    out
}

/// An ordered collection of frames from one capture run.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureSet {
    pub frames: Vec<CsiFrame>,
    /// Free-form annotation, e.g. the channel plan of the run.
    pub label: String,
    pub swap_state: SwapState,
}

impl CaptureSet {
    /// Builds a set, enforcing that all frames share one antenna count.
    pub fn new(
        frames: Vec<CsiFrame>,
        label: String,
        swap_state: SwapState,
    ) -> Result<Self, ModelError> {
        if let Some(first) = frames.first() {
            let m = first.num_rx_antennas;
            for f in &frames {
                if f.num_rx_antennas != m {
                    return Err(ModelError::MixedAntennaCounts {
                        first: m,
                        other: f.num_rx_antennas,
                    });
                }
            }
        }
        Ok(CaptureSet {
            frames,
            label,
            swap_state,
        })
    }

    pub fn num_rx_antennas(&self) -> Option<usize> {
        self.frames.first().map(|f| f.num_rx_antennas)
    }

    /// Frames grouped by channel number, in file order within a group.
    pub fn frames_by_channel(&self) -> BTreeMap<u16, Vec<&CsiFrame>> {
        let mut map: BTreeMap<u16, Vec<&CsiFrame>> = BTreeMap::new();
        for f in &self.frames {
            map.entry(f.channel_number).or_default().push(f);
        }
        map
    }
}

/// Grid a [`PhaseOffsetVector`] lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffsetGrid {
    /// The 56 HT20 subcarriers of one channel.
    ChannelLocal(u16),
    /// The composite 249-bin 2.4 GHz grid (see [`crate::grid`]).
    Global,
}

impl OffsetGrid {
    pub fn len(&self) -> usize {
        match self {
            OffsetGrid::ChannelLocal(_) => HT20_SUBCARRIER_COUNT,
            OffsetGrid::Global => crate::grid::GLOBAL_BIN_COUNT,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Per-bin inter-antenna phase difference for one frame or one merged
/// estimate. Unmasked values are finite and wrapped to (−π, π]; masked
/// bins hold NaN so accidental use is loud.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOffsetVector {
    pub grid: OffsetGrid,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl PhaseOffsetVector {
    pub fn new(grid: OffsetGrid, values: Vec<f64>, mask: Vec<bool>) -> Result<Self, ModelError> {
        let n = grid.len();
        if values.len() != n || mask.len() != n {
            return Err(ModelError::InvalidOffsetVector(format!(
                "length {} / mask {} does not match grid size {}",
                values.len(),
                mask.len(),
                n
            )));
        }
        for (i, (&v, &m)) in values.iter().zip(&mask).enumerate() {
            if m && !(v.is_finite() && v > -std::f64::consts::PI && v <= std::f64::consts::PI) {
                return Err(ModelError::InvalidOffsetVector(format!(
                    "unmasked value {v} at bin {i} outside (-pi, pi]"
                )));
            }
        }
        Ok(PhaseOffsetVector { grid, values, mask })
    }

    /// All-bins-measured constructor; values must already be wrapped.
    pub fn dense(grid: OffsetGrid, values: Vec<f64>) -> Result<Self, ModelError> {
        let mask = vec![true; values.len()];
        PhaseOffsetVector::new(grid, values, mask)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of measured bins.
    pub fn measured_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Iterator over (bin, value) for measured bins.
    pub fn measured(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .zip(&self.mask)
            .enumerate()
            .filter_map(|(i, (&v, &m))| m.then_some((i, v)))
    }
}

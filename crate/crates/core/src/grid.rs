//! Composite 2.4 GHz grid: the thirteen overlapping HT20 channels mapped
//! onto one 249-bin, 312.5 kHz-spaced axis, plus stitching with coverage
//! accounting.
//!
//! Neighboring 2.4 GHz channels sit 5 MHz apart, i.e. 16 bins of
//! 312.5 kHz, so channel `c`, subcarrier `k` lands on global bin
//! `16·(c−1) + k + 28`. The grid is anchored at channel 1's lowest
//! subcarrier (2403.25 MHz) and ends at channel 13's highest
//! (2480.75 MHz); the measured span is 77.5 MHz.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::OffsetGrid;
use crate::model::{ht20_slot, CsiFrame, PhaseOffsetVector};

/// Number of bins in the composite grid.
pub const GLOBAL_BIN_COUNT: usize = 249;

/// Frequency of bin 0 in MHz.
pub const GLOBAL_BASE_FREQUENCY_MHZ: f64 = 2403.25;

/// Bin spacing in MHz (one OFDM subcarrier).
pub const GLOBAL_SPACING_MHZ: f64 = 0.3125;

/// Frequency of global bin `g` in MHz.
pub fn global_bin_frequency_mhz(g: usize) -> f64 {
    GLOBAL_BASE_FREQUENCY_MHZ + GLOBAL_SPACING_MHZ * g as f64
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("DC subcarrier (k=0) has no grid position")]
    DcSubcarrier,
    #[error("channel {0} outside 1..=13")]
    ChannelOutOfRange(u16),
    #[error("subcarrier index {0} outside -28..=28")]
    SubcarrierOutOfRange(i8),
    #[error("duplicate observation for packet {packet} on channel {channel}")]
    DuplicateObservation { packet: usize, channel: u16 },
    #[error("observation grid is not channel-local to channel {0}")]
    WrongGrid(u16),
}

/// Global bin index of subcarrier `k` on 2.4 GHz channel `channel`.
pub fn global_index(channel: u16, k: i8) -> Result<usize, GridError> {
    if !(1..=13).contains(&channel) {
        return Err(GridError::ChannelOutOfRange(channel));
    }
    if k == 0 {
        return Err(GridError::DcSubcarrier);
    }
    if !(-28..=28).contains(&k) {
        return Err(GridError::SubcarrierOutOfRange(k));
    }
    Ok((16 * (channel as usize - 1)).wrapping_add((k as isize + 28) as usize))
}

/// All (channel, subcarrier) pairs that measure global bin `g`; the
/// inverse of [`global_index`].
pub fn channels_covering(g: usize) -> Vec<(u16, i8)> {
    let mut out = Vec::new();
    for channel in 1u16..=13 {
        let k = g as isize - 16 * (channel as isize - 1) - 28;
        if (-28..=28).contains(&k) && k != 0 {
            out.push((channel, k as i8));
        }
    }
    out
}

/// One deposited measurement at a grid bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Deposit<T> {
    pub packet: usize,
    pub channel: u16,
    pub value: T,
}

/// Per-bin collections of deposited values over the composite grid.
#[derive(Debug, Clone)]
pub struct StitchedSpectrum<T> {
    bins: Vec<Vec<Deposit<T>>>,
}

impl<T: Clone> Default for StitchedSpectrum<T> {
    fn default() -> Self {
        StitchedSpectrum {
            bins: vec![Vec::new(); GLOBAL_BIN_COUNT],
        }
    }
}

impl<T: Clone> StitchedSpectrum<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn deposits(&self, g: usize) -> &[Deposit<T>] {
        &self.bins[g]
    }

    pub fn coverage(&self, g: usize) -> usize {
        self.bins[g].len()
    }

    pub fn coverage_vector(&self) -> Vec<usize> {
        self.bins.iter().map(|b| b.len()).collect()
    }

    fn push(&mut self, g: usize, d: Deposit<T>) {
        self.bins[g].push(d);
    }

    /// Merge each covered bin with `f`; uncovered bins yield `None`.
    pub fn merged_with<U>(&self, mut f: impl FnMut(&[Deposit<T>]) -> U) -> Vec<Option<U>> {
        self.bins
            .iter()
            .map(|b| if b.is_empty() { None } else { Some(f(b)) })
            .collect()
    }
}

/// Deposits channel-local phase-offset observations onto the grid.
///
/// Each tuple is (packet index, channel, offsets). Offsets must be on
/// the matching channel-local grid; a repeated (packet, channel) pair
/// is rejected.
pub fn stitch_offsets(
    observations: &[(usize, u16, &PhaseOffsetVector)],
) -> Result<StitchedSpectrum<f64>, GridError> {
    let mut seen = BTreeSet::new();
    let mut spectrum = StitchedSpectrum::new();
    for &(packet, channel, offsets) in observations {
        match offsets.grid {
            OffsetGrid::ChannelLocal(c) if c == channel => {}
            _ => return Err(GridError::WrongGrid(channel)),
        }
        if !seen.insert((packet, channel)) {
            return Err(GridError::DuplicateObservation { packet, channel });
        }
        let indices = crate::model::ht20_subcarrier_indices();
        for (slot, &k) in indices.iter().enumerate() {
            if !offsets.mask[slot] {
                continue;
            }
            let g = global_index(channel, k)?;
            spectrum.push(
                g,
                Deposit {
                    packet,
                    channel,
                    value: offsets.values[slot],
                },
            );
        }
    }
    Ok(spectrum)
}

/// Deposits two-antenna complex gains onto the grid, one `[h0, h1]`
/// pair per bin. Packet indices are assigned per channel in input order.
pub fn stitch_frames(
    frames: &[&CsiFrame],
) -> Result<StitchedSpectrum<[num_complex::Complex64; 2]>, GridError> {
    let mut spectrum = StitchedSpectrum::new();
    let mut per_channel_count = std::collections::BTreeMap::new();
    for frame in frames {
        let packet = {
            let c = per_channel_count
                .entry(frame.channel_number)
                .or_insert(0usize);
            *c += 1;
            *c
        };
        for (slot, &k) in frame.subcarrier_indices.iter().enumerate() {
            debug_assert_eq!(ht20_slot(k), Some(slot));
            let g = global_index(frame.channel_number, k)?;
            spectrum.push(
                g,
                Deposit {
                    packet,
                    channel: frame.channel_number,
                    value: [frame.gains[0][slot], frame.gains[1][slot]],
                },
            );
        }
    }
    Ok(spectrum)
}

/// Spread diagnostics for one multiply-covered bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinSpread {
    pub bin: usize,
    pub coverage: usize,
    /// Largest pairwise circular distance among deposited phases.
    pub spread_rad: f64,
}

/// Consistency report over all bins with coverage ≥ 2.
#[derive(Debug, Clone, Default)]
pub struct OverlapReport {
    pub bins: Vec<BinSpread>,
    pub flagged: Vec<usize>,
    pub tolerance_rad: f64,
}

/// Checks that overlapping channels measured the same phase at each bin.
///
/// Bins with coverage < 2 carry no cross-channel information and are
/// excluded. A bin is flagged when its spread exceeds `tolerance_rad`.
pub fn overlap_consistency(spectrum: &StitchedSpectrum<f64>, tolerance_rad: f64) -> OverlapReport {
    let mut report = OverlapReport {
        tolerance_rad,
        ..Default::default()
    };
    for g in 0..GLOBAL_BIN_COUNT {
        let deposits = spectrum.deposits(g);
        if deposits.len() < 2 {
            continue;
        }
        let mut spread: f64 = 0.0;
        for i in 0..deposits.len() {
            for j in i + 1..deposits.len() {
                let d = crate::offsets::wrap_to_pi(deposits[i].value - deposits[j].value).abs();
                spread = spread.max(d);
            }
        }
        if spread > tolerance_rad {
            report.flagged.push(g);
        }
        report.bins.push(BinSpread {
            bin: g,
            coverage: deposits.len(),
            spread_rad: spread,
        });
    }
    report
}

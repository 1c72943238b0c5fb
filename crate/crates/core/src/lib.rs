//! CSI phase-offset toolkit for two-RF-chain WiFi receivers.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! * [`model`] — CSI capture domain types, channelization arithmetic and
//!   the `.csik` on-disk format ([`format`]).
//! * [`synth`] — synthetic multipath CSI with a planted inter-chain chip
//!   offset, the semi-deterministic PLL π-rotation corruption model and a
//!   cable/splitter/swap emulation, so every estimator has an oracle.
//! * [`grid`] — mapping the thirteen overlapping 2.4 GHz HT20 channels
//!   onto one composite 249-bin, 312.5 kHz grid with coverage accounting.
//! * [`offsets`] — per-subcarrier inter-antenna offset extraction, the
//!   outlier-fill + median correction pipeline and swap calibration.
//! * [`aoa`] — smoothed-MUSIC angle-of-arrival estimation over the
//!   stitched band plus a phase-slope cross-check estimator.

pub mod aoa;
pub mod format;
pub mod grid;
pub mod model;
pub mod offsets;
pub mod synth;

/// Speed of light used by the steering model and the synthesizer.
///
/// Fixed (rather than the CODATA value) so that planted scenes and the
/// estimators agree bit-for-bit when cross-checked.
pub const SPEED_OF_LIGHT_M_S: f64 = 2.998e8;

pub use model::{Band, CaptureSet, CsiFrame, OffsetGrid, PhaseOffsetVector, SwapState};

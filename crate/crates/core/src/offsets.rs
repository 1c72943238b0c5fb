//! Inter-antenna phase-offset extraction and the rotation-cleansing
//! pipeline: per-observation outlier fill, per-bin median over packets
//! and overlapping channels, a final fill pass, plus swap calibration
//! and the π-rotation classifier.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{self, GridError, GLOBAL_BIN_COUNT};
use crate::model::{CsiFrame, ModelError, OffsetGrid, PhaseOffsetVector};

/// Scale factor turning a MAD into a Gaussian-consistent sigma.
pub const MAD_SCALE: f64 = 1.4826;

/// Outlier gate in scaled-MAD units (the cited tool's default).
pub const MAD_THRESHOLD: f64 = 3.0;

/// Default residual tolerance for [`classify_rotation`], wide against
/// the sub-milliradian spread of real chains.
pub const DEFAULT_CLASSIFY_TOLERANCE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("frame has {got} antennas, need at least 2")]
    TooFewAntennas { got: usize },
    #[error("reference antenna {requested} out of range for {antennas}-antenna frame")]
    BadRefAntenna { requested: usize, antennas: usize },
    #[error("offset vectors live on different grids")]
    GridMismatch,
    #[error("offset vectors have different masks")]
    MaskMismatch,
    #[error("global bins without any observation: {0:?}")]
    Coverage(Vec<usize>),
    #[error("observation set: {0}")]
    BadObservation(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Wraps `x` to the half-open interval (−π, π].
///
/// Panics on non-finite input; callers own the finiteness contract.
pub fn wrap_to_pi(x: f64) -> f64 {
    assert!(x.is_finite(), "wrap_to_pi: non-finite input {x}");
    if x > -PI && x <= PI {
        return x; // already in range; keep it bit-exact
    }
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Circular mean (argument of the resultant vector) of `values`.
pub fn circular_mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut s, mut c, mut n) = (0.0, 0.0, 0usize);
    for v in values {
        s += v.sin();
        c += v.cos();
        n += 1;
    }
    (n > 0).then(|| wrap_to_pi(s.atan2(c)))
}

/// Circular median anchor: the sample minimizing the summed circular
/// distance to all others (ties resolved toward the smaller value).
fn circular_median_anchor(values: &[f64]) -> f64 {
    let mut best = values[0];
    let mut best_cost = f64::INFINITY;
    for &candidate in values {
        let cost: f64 = values
            .iter()
            .map(|&v| wrap_to_pi(v - candidate).abs())
            .sum();
        if cost < best_cost - 1e-15 || (cost <= best_cost + 1e-15 && candidate < best) {
            best_cost = cost.min(best_cost);
            best = candidate;
        }
    }
    best
}

fn linear_median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Median of wrapped phases that stays sane near ±π: samples are
/// unwrapped around their circular median, reduced with the linear
/// median (midpoint convention for even counts), and re-wrapped.
pub fn circular_safe_median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let anchor = circular_median_anchor(values);
    let mut unwrapped: Vec<f64> = values
        .iter()
        .map(|&v| anchor + wrap_to_pi(v - anchor))
        .collect();
    unwrapped.sort_by(|a, b| a.partial_cmp(b).unwrap());
    wrap_to_pi(linear_median(&unwrapped))
}

/// Per-subcarrier inter-antenna offset of one frame:
/// `wrap(arg(H_other · conj(H_ref)))` on the channel-local grid.
///
/// Bins where either gain is exactly zero are masked out rather than
/// raised as errors. The common per-packet phase (CFO/PDD) cancels in
/// the conjugate product, which is the §-level reason this quantity is
/// usable at all.
pub fn extract_phase_offset(
    frame: &CsiFrame,
    ref_antenna: usize,
) -> Result<PhaseOffsetVector, PipelineError> {
    if frame.num_rx_antennas < 2 {
        return Err(PipelineError::TooFewAntennas {
            got: frame.num_rx_antennas,
        });
    }
    if ref_antenna >= frame.num_rx_antennas {
        return Err(PipelineError::BadRefAntenna {
            requested: ref_antenna,
            antennas: frame.num_rx_antennas,
        });
    }
    let other = if ref_antenna == 0 { 1 } else { 0 };

    let n = frame.subcarrier_indices.len();
    let mut values = vec![f64::NAN; n];
    let mut mask = vec![false; n];
    for slot in 0..n {
        let h_ref = frame.gains[ref_antenna][slot];
        let h_other = frame.gains[other][slot];
        if h_ref.norm_sqr() == 0.0 || h_other.norm_sqr() == 0.0 {
            continue;
        }
        values[slot] = wrap_to_pi((h_other * h_ref.conj()).arg());
        mask[slot] = true;
    }
    Ok(PhaseOffsetVector::new(
        OffsetGrid::ChannelLocal(frame.channel_number),
        values,
        mask,
    )?)
}

/// Result of one outlier-fill pass.
#[derive(Debug, Clone, PartialEq)]
pub struct FillOutcome {
    pub values: Vec<f64>,
    /// True where the input sample was detected as an outlier.
    pub outliers: Vec<bool>,
    /// Set when fewer than two non-outliers remained and the input was
    /// returned unchanged.
    pub degenerate: bool,
}

/// Robust outlier replacement matching `filloutliers(x,'linear')`:
/// a sample is an outlier iff its distance from the median exceeds
/// 3 · 1.4826 · MAD; outliers are replaced by linear interpolation
/// between the nearest non-outlier neighbors by index, with linear
/// extrapolation from the two nearest non-outliers at the ends.
pub fn fill_outliers_linear(values: &[f64]) -> Result<FillOutcome, PipelineError> {
    let n = values.len();
    if n < 3 {
        return Err(PipelineError::InsufficientSamples { needed: 3, got: n });
    }

    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = linear_median(&sorted);

    let mut devs: Vec<f64> = values.iter().map(|v| (v - median).abs()).collect();
    devs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mad = linear_median(&devs);

    // With MAD = 0 the gate degenerates to "exactly the median".
    let threshold = MAD_THRESHOLD * MAD_SCALE * mad;
    let outliers: Vec<bool> = values
        .iter()
        .map(|v| (v - median).abs() > threshold)
        .collect();

    let keep: Vec<usize> = (0..n).filter(|&i| !outliers[i]).collect();
    if keep.len() < 2 {
        log::warn!(
            "fill_outliers_linear: {} non-outliers of {n}, returning input",
            keep.len()
        );
        return Ok(FillOutcome {
            values: values.to_vec(),
            outliers,
            degenerate: true,
        });
    }

    let line = |(i0, i1): (usize, usize), at: usize| -> f64 {
        let (x0, x1) = (i0 as f64, i1 as f64);
        let (y0, y1) = (values[i0], values[i1]);
        y0 + (y1 - y0) * (at as f64 - x0) / (x1 - x0)
    };

    let mut filled = values.to_vec();
    for i in 0..n {
        if !outliers[i] {
            continue;
        }
        let left = keep.iter().rev().find(|&&k| k < i).copied();
        let right = keep.iter().find(|&&k| k > i).copied();
        filled[i] = match (left, right) {
            (Some(l), Some(r)) => line((l, r), i),
            (None, Some(_)) => line((keep[0], keep[1]), i),
            (Some(_), None) => line((keep[keep.len() - 2], keep[keep.len() - 1]), i),
            (None, None) => unreachable!("keep.len() >= 2"),
        };
    }
    Ok(FillOutcome {
        values: filled,
        outliers,
        degenerate: false,
    })
}

/// Masked variant: filters the measured samples as one compacted window
/// (the DC hole and unmeasured bins carry no index distance), scattering
/// results back. Masked positions are returned untouched.
pub fn fill_outliers_linear_masked(
    values: &[f64],
    mask: &[bool],
) -> Result<FillOutcome, PipelineError> {
    assert_eq!(values.len(), mask.len());
    let measured: Vec<usize> = (0..values.len()).filter(|&i| mask[i]).collect();
    let compact: Vec<f64> = measured.iter().map(|&i| values[i]).collect();
    let inner = fill_outliers_linear(&compact)?;

    let mut out_values = values.to_vec();
    let mut out_outliers = vec![false; values.len()];
    for (c, &i) in measured.iter().enumerate() {
        out_values[i] = inner.values[c];
        out_outliers[i] = inner.outliers[c];
    }
    Ok(FillOutcome {
        values: out_values,
        outliers: out_outliers,
        degenerate: inner.degenerate,
    })
}

/// One packet's offsets lifted to the composite grid.
#[derive(Debug, Clone)]
pub struct Observation {
    /// 1-based packet index within its channel.
    pub packet: usize,
    pub channel: u16,
    /// Offsets on [`OffsetGrid::Global`]; exactly the channel's 56
    /// reachable bins are unmasked (fewer if gains were zero).
    pub offsets: PhaseOffsetVector,
}

/// The φ̂ samples feeding [`correct_offsets`]: N packets per channel
/// over a set of (possibly overlapping) channels.
#[derive(Debug, Clone)]
pub struct OffsetObservationSet {
    observations: Vec<Observation>,
    channels: BTreeSet<u16>,
    packets_per_channel: BTreeMap<u16, usize>,
}

impl OffsetObservationSet {
    pub fn new(observations: Vec<Observation>) -> Result<Self, PipelineError> {
        let mut channels = BTreeSet::new();
        let mut packets_per_channel: BTreeMap<u16, usize> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for obs in &observations {
            if obs.offsets.grid != OffsetGrid::Global {
                return Err(PipelineError::BadObservation(format!(
                    "observation (t={}, c={}) is not on the global grid",
                    obs.packet, obs.channel
                )));
            }
            if obs.packet == 0 {
                return Err(PipelineError::BadObservation(
                    "packet indices are 1-based".into(),
                ));
            }
            if !seen.insert((obs.packet, obs.channel)) {
                return Err(PipelineError::Grid(GridError::DuplicateObservation {
                    packet: obs.packet,
                    channel: obs.channel,
                }));
            }
            channels.insert(obs.channel);
            let n = packets_per_channel.entry(obs.channel).or_insert(0);
            *n = (*n).max(obs.packet);
        }
        Ok(OffsetObservationSet {
            observations,
            channels,
            packets_per_channel,
        })
    }

    /// Extracts offsets from 2.4 GHz frames and lifts them onto the
    /// global grid, numbering packets per channel in input order.
    pub fn from_frames(frames: &[&CsiFrame], ref_antenna: usize) -> Result<Self, PipelineError> {
        let mut counters: BTreeMap<u16, usize> = BTreeMap::new();
        let mut observations = Vec::with_capacity(frames.len());
        for frame in frames {
            let local = extract_phase_offset(frame, ref_antenna)?;
            let global = lift_to_global(&local)?;
            let t = counters.entry(frame.channel_number).or_insert(0);
            *t += 1;
            observations.push(Observation {
                packet: *t,
                channel: frame.channel_number,
                offsets: global,
            });
        }
        OffsetObservationSet::new(observations)
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn channels(&self) -> &BTreeSet<u16> {
        &self.channels
    }

    /// N: the largest per-channel packet count.
    pub fn packets_per_channel(&self) -> usize {
        self.packets_per_channel
            .values()
            .copied()
            .max()
            .unwrap_or(0)
    }

    /// Bins reachable by the channels present (true = inside footprint).
    pub fn footprint(&self) -> Vec<bool> {
        let mut fp = vec![false; GLOBAL_BIN_COUNT];
        for &c in &self.channels {
            for k in -28i8..=28 {
                if k == 0 {
                    continue;
                }
                if let Ok(g) = grid::global_index(c, k) {
                    fp[g] = true;
                }
            }
        }
        fp
    }
}

/// Re-bins a channel-local offset vector onto the global grid.
pub fn lift_to_global(local: &PhaseOffsetVector) -> Result<PhaseOffsetVector, PipelineError> {
    let channel = match local.grid {
        OffsetGrid::ChannelLocal(c) => c,
        OffsetGrid::Global => return Ok(local.clone()),
    };
    let mut values = vec![f64::NAN; GLOBAL_BIN_COUNT];
    let mut mask = vec![false; GLOBAL_BIN_COUNT];
    let indices = crate::model::ht20_subcarrier_indices();
    for (slot, &k) in indices.iter().enumerate() {
        if !local.mask[slot] {
            continue;
        }
        let g = grid::global_index(channel, k)?;
        values[g] = local.values[slot];
        mask[g] = true;
    }
    Ok(PhaseOffsetVector::new(OffsetGrid::Global, values, mask)?)
}

/// Output of the three-stage correction.
#[derive(Debug, Clone)]
pub struct CorrectionReport {
    /// Final corrected offset vector φ⃗ on the global grid; masked true
    /// exactly on the footprint of the observed channels.
    pub corrected: PhaseOffsetVector,
    pub per_bin_sample_count: Vec<usize>,
    /// Fraction of stage-1 samples flagged as outliers, per bin.
    pub per_bin_outlier_fraction: Vec<f64>,
    /// Robust sigma (1.4826 · median |residual|) of the filtered samples
    /// around the per-bin medians.
    pub residual_spread: f64,
}

/// The rotation-cleansing pipeline:
///
/// 1. each observation is outlier-filled along its measured bins,
/// 2. each bin takes the median over all filtered samples
///    (packets × overlapping channels),
/// 3. the merged vector gets one more outlier-fill pass.
pub fn correct_offsets(obs: &OffsetObservationSet) -> Result<CorrectionReport, PipelineError> {
    let footprint = obs.footprint();

    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); GLOBAL_BIN_COUNT];
    let mut outlier_counts = vec![0usize; GLOBAL_BIN_COUNT];
    let mut degenerate = 0usize;
    for observation in obs.observations() {
        let filtered =
            fill_outliers_linear_masked(&observation.offsets.values, &observation.offsets.mask)?;
        if filtered.degenerate {
            degenerate += 1;
        }
        for g in 0..GLOBAL_BIN_COUNT {
            if observation.offsets.mask[g] {
                samples[g].push(filtered.values[g]);
                if filtered.outliers[g] {
                    outlier_counts[g] += 1;
                }
            }
        }
    }
    if degenerate > 0 {
        log::warn!("correct_offsets: {degenerate} observations hit the degenerate fill case");
    }

    let missing: Vec<usize> = (0..GLOBAL_BIN_COUNT)
        .filter(|&g| footprint[g] && samples[g].is_empty())
        .collect();
    if !missing.is_empty() {
        return Err(PipelineError::Coverage(missing));
    }

    let mut merged = vec![f64::NAN; GLOBAL_BIN_COUNT];
    for g in 0..GLOBAL_BIN_COUNT {
        if !samples[g].is_empty() {
            merged[g] = circular_safe_median(&samples[g]);
        }
    }

    // Residual spread before the final fill, pooled over all samples.
    let mut residuals: Vec<f64> = Vec::new();
    for g in 0..GLOBAL_BIN_COUNT {
        for &s in &samples[g] {
            residuals.push(wrap_to_pi(s - merged[g]).abs());
        }
    }
    let residual_spread = if residuals.is_empty() {
        0.0
    } else {
        residuals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        MAD_SCALE * linear_median(&residuals)
    };

    // Stage 3 over the footprint, compacted in bin order.
    let final_fill = fill_outliers_linear_masked(&merged, &footprint)?;
    let mut values = vec![f64::NAN; GLOBAL_BIN_COUNT];
    for g in 0..GLOBAL_BIN_COUNT {
        if footprint[g] {
            values[g] = wrap_to_pi(final_fill.values[g]);
        }
    }

    let corrected = PhaseOffsetVector::new(OffsetGrid::Global, values, footprint)?;
    let per_bin_outlier_fraction = (0..GLOBAL_BIN_COUNT)
        .map(|g| {
            if samples[g].is_empty() {
                0.0
            } else {
                outlier_counts[g] as f64 / samples[g].len() as f64
            }
        })
        .collect();

    Ok(CorrectionReport {
        corrected,
        per_bin_sample_count: samples.iter().map(Vec::len).collect(),
        per_bin_outlier_fraction,
        residual_spread,
    })
}

/// Circular mean of a direct-cabling and a swapped-cabling measurement.
///
/// Swapping flips the sign of the cable-induced differential ψ, so the
/// mean preserves the chip offset and cancels ψ. Bins where the two
/// inputs are antipodal carry no information and come back masked.
pub fn swap_calibrate(
    direct: &PhaseOffsetVector,
    swapped: &PhaseOffsetVector,
) -> Result<PhaseOffsetVector, PipelineError> {
    if direct.grid != swapped.grid {
        return Err(PipelineError::GridMismatch);
    }
    if direct.mask != swapped.mask {
        return Err(PipelineError::MaskMismatch);
    }
    let n = direct.len();
    let mut values = vec![f64::NAN; n];
    let mut mask = vec![false; n];
    for i in 0..n {
        if !direct.mask[i] {
            continue;
        }
        let sum = Complex64::from_polar(1.0, direct.values[i])
            + Complex64::from_polar(1.0, swapped.values[i]);
        if sum.norm() < 2e-9 {
            continue; // antipodal
        }
        values[i] = wrap_to_pi(sum.arg());
        mask[i] = true;
    }
    Ok(PhaseOffsetVector::new(direct.grid, values, mask)?)
}

/// Candidate rotation multiples for a reference offset sign, in
/// preference order (smallest |n| first; odd rotations canonicalize to
/// the sign opposite the reference, matching the asymmetry of the
/// hardware rotation sets {−2,−1,0,1} / {−1,0,1,2}).
fn rotation_candidates(reference: f64) -> [i8; 4] {
    if reference >= 0.0 {
        [0, -1, 1, -2]
    } else {
        [0, 1, -1, 2]
    }
}

/// Identifies the rotation multiple `n` with `measured ≈ reference + nπ`
/// (mod 2π), searching the sign-appropriate rotation set. Returns `None`
/// when no candidate lands within `tolerance`.
///
/// After wrapping to (−π, π], `+π` and `−π` rotations are the same
/// operation and `±2π` rotations are invisible, so odd `n` is reported
/// canonically (−1 for `reference ≥ 0`, +1 otherwise) and even non-zero
/// `n` collapses to 0.
pub fn classify_rotation(measured: f64, reference: f64, tolerance: f64) -> Option<i8> {
    let mut best: Option<(i8, f64)> = None;
    for n in rotation_candidates(reference) {
        let residual = wrap_to_pi(measured - reference - n as f64 * PI).abs();
        // Candidates two apart are the same action mod 2π; near-ties
        // keep the earlier, canonical candidate.
        if best.is_none_or(|(_, b)| residual < b - 1e-12) {
            best = Some((n, residual));
        }
    }
    best.and_then(|(n, r)| (r < tolerance).then_some(n))
}

//! Angle-of-arrival estimation from corrected two-antenna CSI.
//!
//! The estimator forms SpotFi-style smoothed snapshots — length-L
//! subcarrier windows per antenna, stacked to height 2L — averages them
//! into a covariance matrix, and scans a MUSIC pseudospectrum over
//! (θ, τ). Windows never cross a channel-capture boundary or the DC
//! hole: absolute phase is not coherent across captures (each carries
//! its own packet detection delay), so coherence is only assumed within
//! one 20 MHz capture.
//!
//! A phase-slope estimator over the corrected offset vector provides an
//! independent cross-check.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{self, GridError};
use crate::model::{
    CaptureSet, CsiFrame, ModelError, OffsetGrid, PhaseOffsetVector, SUBCARRIER_SPACING_MHZ,
};
use crate::offsets::{
    classify_rotation, correct_offsets, wrap_to_pi, CorrectionReport, OffsetObservationSet,
    PipelineError, DEFAULT_CLASSIFY_TOLERANCE,
};

/// Half the HT20 layout: the longest contiguous run of subcarriers.
const HALF_RUN: usize = 28;

#[derive(Debug, Error)]
pub enum AoaError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("smoothed matrix has {got} columns, need at least {need}")]
    TooFewColumns { got: usize, need: usize },
    #[error("model order {num_paths} must be below the smoothed dimension {dim}")]
    OrderTooLarge { num_paths: usize, dim: usize },
    #[error("degenerate subspace: covariance rank {rank} with {num_paths} assumed paths")]
    DegenerateSubspace { rank: usize, num_paths: usize },
    #[error("phase-slope argument {argument} outside [-1, 1]")]
    OutOfRange { argument: f64 },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Array geometry and search grids for the MUSIC scan.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringModel {
    pub antenna_spacing_m: f64,
    pub speed_of_light_m_s: f64,
    pub theta_grid_deg: Vec<f64>,
    pub tau_grid_ns: Vec<f64>,
    /// Subcarrier window length L of the smoothing (2..=28).
    pub smoothing_window: usize,
}

impl Default for SteeringModel {
    fn default() -> Self {
        // θ capped at ±45°: at 2.4 GHz a 9 cm baseline exceeds λ/2, so
        // wider angles alias anyway.
        let theta_grid_deg = (0..=180).map(|i| -45.0 + 0.5 * i as f64).collect();
        let tau_grid_ns = (0..=100).map(|i| i as f64).collect();
        SteeringModel {
            antenna_spacing_m: 0.09,
            speed_of_light_m_s: crate::SPEED_OF_LIGHT_M_S,
            theta_grid_deg,
            tau_grid_ns,
            smoothing_window: 16,
        }
    }
}

impl SteeringModel {
    pub fn validate(&self) -> Result<(), AoaError> {
        if self.antenna_spacing_m <= 0.0 || !self.antenna_spacing_m.is_finite() {
            return Err(AoaError::InsufficientData(
                "antenna spacing must be positive".into(),
            ));
        }
        for grid in [&self.theta_grid_deg, &self.tau_grid_ns] {
            if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(AoaError::InsufficientData(
                    "search grids must be non-empty and sorted".into(),
                ));
            }
        }
        if self.smoothing_window < 2 || self.smoothing_window > HALF_RUN {
            return Err(AoaError::InsufficientData(format!(
                "smoothing window {} outside 2..={HALF_RUN}",
                self.smoothing_window
            )));
        }
        Ok(())
    }
}

/// Inter-antenna phase of a far-field plane wave from `theta_deg` at
/// `frequency_hz`: `−2π · d · sin(θ) · f / c`.
pub fn steering_phase(theta_deg: f64, frequency_hz: f64, model: &SteeringModel) -> f64 {
    -TAU * model.antenna_spacing_m * theta_deg.to_radians().sin() * frequency_hz
        / model.speed_of_light_m_s
}

/// Smoothed snapshot matrix plus the metadata MUSIC needs.
#[derive(Debug, Clone)]
pub struct SmoothedMatrix {
    /// 2L × num_windows; each column stacks [H0 window; H1 window].
    pub data: DMatrix<Complex64>,
    /// Mid-point of the measured frequency span, used by the
    /// narrowband steering approximation.
    pub band_center_hz: f64,
    pub window: usize,
}

/// Builds the smoothed matrix: for each packet and each length-L
/// contiguous subcarrier run within one 20 MHz capture, one column of
/// height 2L.
pub fn build_smoothed_matrix(
    frames: &[&CsiFrame],
    model: &SteeringModel,
) -> Result<SmoothedMatrix, AoaError> {
    if frames.is_empty() {
        return Err(AoaError::InsufficientData("no frames".into()));
    }
    let l = model.smoothing_window;
    if l < 2 {
        return Err(AoaError::InsufficientData(
            "smoothing window below 2".into(),
        ));
    }
    if l > HALF_RUN {
        return Err(AoaError::InsufficientData(format!(
            "no window of length {l} available: longest contiguous run is {HALF_RUN} bins"
        )));
    }

    let mut columns: Vec<DVector<Complex64>> = Vec::new();
    let mut f_min = f64::INFINITY;
    let mut f_max = f64::NEG_INFINITY;
    for frame in frames {
        if frame.num_rx_antennas < 2 {
            return Err(AoaError::Pipeline(PipelineError::TooFewAntennas {
                got: frame.num_rx_antennas,
            }));
        }
        f_min = f_min.min(frame.subcarrier_frequency_hz(0));
        f_max = f_max.max(frame.subcarrier_frequency_hz(frame.subcarrier_indices.len() - 1));
        // The two HT20 halves; windows stay inside one half.
        for run_start in [0, HALF_RUN] {
            for start in run_start..=(run_start + HALF_RUN - l) {
                let mut col = DVector::zeros(2 * l);
                for i in 0..l {
                    col[i] = frame.gains[0][start + i];
                    col[l + i] = frame.gains[1][start + i];
                }
                columns.push(col);
            }
        }
    }
    if columns.is_empty() {
        return Err(AoaError::InsufficientData(
            "no smoothing windows produced".into(),
        ));
    }

    Ok(SmoothedMatrix {
        data: DMatrix::from_columns(&columns),
        band_center_hz: 0.5 * (f_min + f_max),
        window: l,
    })
}

/// Model order selection for the MUSIC subspace split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelOrder {
    Fixed(usize),
    /// Largest ratio gap in the descending eigenvalue profile.
    EigenGap,
}

/// Picks the order at the largest eigenvalue ratio gap.
pub fn eigen_gap_order(eigenvalues_desc: &[f64]) -> usize {
    if eigenvalues_desc.len() < 2 {
        return 1;
    }
    let floor = eigenvalues_desc[0].max(f64::MIN_POSITIVE) * 1e-15;
    let mut best = (1usize, 0.0f64);
    for i in 1..eigenvalues_desc.len() {
        let ratio = eigenvalues_desc[i - 1] / eigenvalues_desc[i].max(floor);
        if ratio > best.1 {
            best = (i, ratio);
        }
    }
    best.0
}

/// MUSIC pseudospectrum over the (θ, τ) grid with peak location and
/// the eigenvalue profile of the smoothed covariance.
#[derive(Debug, Clone)]
pub struct AoaResult {
    /// Row per θ grid point, column per τ grid point.
    pub pseudospectrum: Vec<Vec<f64>>,
    pub theta_grid_deg: Vec<f64>,
    pub tau_grid_ns: Vec<f64>,
    pub peak_theta_deg: f64,
    pub peak_tau_ns: f64,
    /// Model order actually used for the subspace split.
    pub num_paths: usize,
    /// Descending, clamped at zero.
    pub eigenvalue_profile: Vec<f64>,
}

impl AoaResult {
    /// λ₂/λ₁; zero for rank-one profiles.
    pub fn eigen_ratio(&self) -> f64 {
        match self.eigenvalue_profile.as_slice() {
            [first, second, ..] if *first > 0.0 => second / first,
            _ => 0.0,
        }
    }
}

/// Runs MUSIC on a smoothed matrix.
///
/// The steering vector element for antenna `m`, window offset `l` is
/// `exp(−j·2π·δf·l·τ) · exp(j·m·steering_phase(θ, f̄))` with δf one
/// subcarrier (312.5 kHz) and f̄ the band center.
pub fn music_spectrum(
    smoothed: &SmoothedMatrix,
    model: &SteeringModel,
    order: ModelOrder,
) -> Result<AoaResult, AoaError> {
    let dim = smoothed.data.nrows();
    let cols = smoothed.data.ncols();
    let l = smoothed.window;
    assert_eq!(dim, 2 * l);
    if cols < dim {
        return Err(AoaError::TooFewColumns {
            got: cols,
            need: dim,
        });
    }

    let covariance = (&smoothed.data * smoothed.data.adjoint()).unscale(cols as f64);
    let eigen = covariance.symmetric_eigen();

    let mut order_desc: Vec<usize> = (0..dim).collect();
    order_desc.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap()
    });
    let eigenvalue_profile: Vec<f64> = order_desc
        .iter()
        .map(|&i| eigen.eigenvalues[i].max(0.0))
        .collect();

    let lambda_max = eigenvalue_profile[0];
    let rank = if lambda_max > 0.0 {
        eigenvalue_profile
            .iter()
            .filter(|&&v| v > lambda_max * 1e-12)
            .count()
    } else {
        0
    };

    let num_paths = match order {
        ModelOrder::Fixed(k) => k,
        ModelOrder::EigenGap => eigen_gap_order(&eigenvalue_profile),
    };
    if num_paths == 0 || num_paths >= dim {
        return Err(AoaError::OrderTooLarge { num_paths, dim });
    }
    if num_paths > rank {
        return Err(AoaError::DegenerateSubspace { rank, num_paths });
    }

    // Noise subspace: eigenvectors past the num_paths largest.
    let noise_cols: Vec<Vec<Complex64>> = order_desc[num_paths..]
        .iter()
        .map(|&i| eigen.eigenvectors.column(i).iter().copied().collect())
        .collect();

    let delta_f_hz = SUBCARRIER_SPACING_MHZ * 1e6;
    // Per-τ delay vectors and per-(τ, noise column) partial inner
    // products: e^H a = S0 + antenna_factor · S1 with S0/S1 the per-half
    // sums, so the θ loop costs one complex multiply per column.
    let mut partials: Vec<Vec<(Complex64, Complex64)>> =
        Vec::with_capacity(model.tau_grid_ns.len());
    for &tau_ns in &model.tau_grid_ns {
        let delay: Vec<Complex64> = (0..l)
            .map(|i| Complex64::from_polar(1.0, -TAU * delta_f_hz * i as f64 * tau_ns * 1e-9))
            .collect();
        let per_col: Vec<(Complex64, Complex64)> = noise_cols
            .iter()
            .map(|e| {
                let mut s0 = Complex64::new(0.0, 0.0);
                let mut s1 = Complex64::new(0.0, 0.0);
                for i in 0..l {
                    s0 += e[i].conj() * delay[i];
                    s1 += e[l + i].conj() * delay[i];
                }
                (s0, s1)
            })
            .collect();
        partials.push(per_col);
    }

    let mut pseudospectrum = Vec::with_capacity(model.theta_grid_deg.len());
    let mut peak = (0usize, 0usize, f64::NEG_INFINITY);
    for (ti, &theta) in model.theta_grid_deg.iter().enumerate() {
        let antenna_factor =
            Complex64::from_polar(1.0, steering_phase(theta, smoothed.band_center_hz, model));
        let mut row = Vec::with_capacity(model.tau_grid_ns.len());
        for (ui, per_col) in partials.iter().enumerate() {
            let mut denom = 0.0;
            for &(s0, s1) in per_col {
                denom += (s0 + antenna_factor * s1).norm_sqr();
            }
            let power = 1.0 / denom.max(1e-300);
            if power > peak.2 {
                peak = (ti, ui, power);
            }
            row.push(power);
        }
        pseudospectrum.push(row);
    }

    Ok(AoaResult {
        pseudospectrum,
        theta_grid_deg: model.theta_grid_deg.clone(),
        tau_grid_ns: model.tau_grid_ns.clone(),
        peak_theta_deg: model.theta_grid_deg[peak.0],
        peak_tau_ns: model.tau_grid_ns[peak.1],
        num_paths,
        eigenvalue_profile,
    })
}

fn bin_frequency_hz(grid_kind: OffsetGrid, bin: usize) -> Result<f64, AoaError> {
    match grid_kind {
        OffsetGrid::Global => Ok(grid::global_bin_frequency_mhz(bin) * 1e6),
        OffsetGrid::ChannelLocal(c) => {
            let center = crate::model::channel_center_frequency(crate::model::Band::Band24, c)?;
            let k = crate::model::ht20_subcarrier_indices()[bin] as f64;
            Ok((center + k * SUBCARRIER_SPACING_MHZ) * 1e6)
        }
    }
}

/// Single-number cross-check: inverts the mean steering phase,
/// `θ = arcsin(−φ̄ · c / (2π · f̄ · d))` with φ̄ the circular mean of the
/// measured bins and f̄ their mean frequency.
pub fn phase_slope_aoa(
    corrected: &PhaseOffsetVector,
    model: &SteeringModel,
) -> Result<f64, AoaError> {
    let measured: Vec<(usize, f64)> = corrected.measured().collect();
    if measured.len() < 10 {
        return Err(AoaError::InsufficientData(format!(
            "phase-slope needs >= 10 measured bins, got {}",
            measured.len()
        )));
    }
    let phi_bar = crate::offsets::circular_mean(measured.iter().map(|&(_, v)| v)).unwrap();
    let mut f_bar = 0.0;
    for &(bin, _) in &measured {
        f_bar += bin_frequency_hz(corrected.grid, bin)?;
    }
    f_bar /= measured.len() as f64;

    let argument = -phi_bar * model.speed_of_light_m_s / (TAU * f_bar * model.antenna_spacing_m);
    if argument.abs() > 1.0 {
        return Err(AoaError::OutOfRange { argument });
    }
    Ok(argument.asin().to_degrees())
}

/// Knobs for the end-to-end pipeline.
#[derive(Debug, Clone)]
pub struct AoaPipelineParams {
    pub ref_antenna: usize,
    /// Calibrated chip offset (e.g. from a swap-calibrated cable run or
    /// a simulation sidecar), removed from antenna 1 before MUSIC. When
    /// absent the chip offset stays in and biases the estimate by its
    /// equivalent angle.
    pub chip_offset: Option<PhaseOffsetVector>,
    pub order: ModelOrder,
    pub classify_tolerance: f64,
}

impl Default for AoaPipelineParams {
    fn default() -> Self {
        AoaPipelineParams {
            ref_antenna: 0,
            chip_offset: None,
            order: ModelOrder::Fixed(1),
            classify_tolerance: DEFAULT_CLASSIFY_TOLERANCE,
        }
    }
}

/// Everything the end-to-end estimation produces.
#[derive(Debug, Clone)]
pub struct EndToEndResult {
    pub music: AoaResult,
    /// Cross-check estimate; `None` when the slope inversion failed.
    pub phase_slope_deg: Option<f64>,
    pub correction: CorrectionReport,
    /// Number of (packet, subcarrier) cells whose π-rotation was undone.
    pub cleaned_rotations: usize,
}

/// Full pipeline: extract offsets → correct → undo per-cell π-rotations
/// against the corrected curve → remove the calibrated chip offset →
/// smooth → MUSIC, plus the phase-slope diagnostic.
pub fn estimate_aoa_endtoend(
    captures: &[CaptureSet],
    model: &SteeringModel,
    params: &AoaPipelineParams,
) -> Result<EndToEndResult, AoaError> {
    let mut frames: Vec<CsiFrame> = captures
        .iter()
        .flat_map(|set| set.frames.iter().cloned())
        .collect();
    if frames.is_empty() {
        return Err(AoaError::InsufficientData("zero packets".into()));
    }

    let refs: Vec<&CsiFrame> = frames.iter().collect();
    let observations = OffsetObservationSet::from_frames(&refs, params.ref_antenna)?;
    let correction = correct_offsets(&observations)?;

    // Undo rotations cell by cell against the corrected curve, then
    // strip the calibrated chip offset from antenna 1.
    let mut cleaned_rotations = 0usize;
    for frame in frames.iter_mut() {
        for slot in 0..frame.subcarrier_indices.len() {
            let g = grid::global_index(frame.channel_number, frame.subcarrier_indices[slot])?;
            let h0 = frame.gains[0][slot];
            let h1 = frame.gains[1][slot];
            if correction.corrected.mask[g] && h0.norm_sqr() > 0.0 && h1.norm_sqr() > 0.0 {
                let measured = wrap_to_pi((h1 * h0.conj()).arg());
                let reference = correction.corrected.values[g];
                if let Some(n) = classify_rotation(measured, reference, params.classify_tolerance) {
                    if n.rem_euclid(2) == 1 {
                        frame.gains[1][slot] = -frame.gains[1][slot];
                        cleaned_rotations += 1;
                    }
                }
            }
            if let Some(chip) = &params.chip_offset {
                if chip.mask[g] {
                    frame.gains[1][slot] *= Complex64::from_polar(1.0, -chip.values[g]);
                }
            }
        }
    }

    let refs: Vec<&CsiFrame> = frames.iter().collect();
    let smoothed = build_smoothed_matrix(&refs, model)?;
    let music = music_spectrum(&smoothed, model, params.order)?;

    // Phase-slope diagnostic over the steering-only part of the curve.
    let slope_input = match &params.chip_offset {
        None => correction.corrected.clone(),
        Some(chip) => {
            let n = correction.corrected.len();
            let mut values = vec![f64::NAN; n];
            let mut mask = vec![false; n];
            for g in 0..n {
                if correction.corrected.mask[g] && chip.mask[g] {
                    values[g] = wrap_to_pi(correction.corrected.values[g] - chip.values[g]);
                    mask[g] = true;
                }
            }
            PhaseOffsetVector::new(OffsetGrid::Global, values, mask)?
        }
    };
    let phase_slope_deg = match phase_slope_aoa(&slope_input, model) {
        Ok(theta) => Some(theta),
        Err(e) => {
            log::warn!("phase-slope diagnostic unavailable: {e}");
            None
        }
    };

    Ok(EndToEndResult {
        music,
        phase_slope_deg,
        correction,
        cleaned_rotations,
    })
}

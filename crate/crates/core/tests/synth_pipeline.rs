//! End-to-end oracles: the synthesizer plants a known chip offset, the
//! correction pipeline must give it back through corruption, and the
//! overlap-consistency check must flag exactly the bins the injection
//! log says disagree.

use std::collections::BTreeSet;

use csikit_core::grid::{global_index, overlap_consistency, stitch_offsets, GLOBAL_BIN_COUNT};
use csikit_core::model::{CsiFrame, PhaseOffsetVector};
use csikit_core::offsets::{
    correct_offsets, extract_phase_offset, wrap_to_pi, OffsetObservationSet,
};
use csikit_core::synth::{
    emulate_cable_setup, generate_multipath_csi, inject_pll_rotation, ChipOffsetModel, Granularity,
    PathSpec, SceneSpec,
};
use num_complex::Complex64;

fn cable_scene(seed: u64) -> SceneSpec {
    // Cable-like: one broadside zero-delay path, so the extracted offset
    // is exactly the planted chip curve.
    SceneSpec {
        paths: vec![PathSpec {
            complex_gain: Complex64::new(1.0, 0.0),
            aoa_deg: 0.0,
            delay_ns: 0.0,
        }],
        antenna_spacing_m: 0.09,
        true_chip_offset: ChipOffsetModel::LinearRamp {
            start_rad: -0.17,
            end_rad: -0.08,
        },
        cable_offset_rad: 0.0,
        corruption_prob: 0.25,
        corruption_granularity: Granularity::PerSubcarrier,
        noise_std: 0.0,
        rng_seed: seed,
    }
}

#[test]
fn correction_recovers_planted_offset_through_corruption() {
    let scene = cable_scene(2024);
    let truth = scene.true_chip_offset.truth_vector().unwrap();

    let mut frames: Vec<CsiFrame> = Vec::new();
    for channel in 1u16..=13 {
        let clean = generate_multipath_csi(&scene, channel, 6).unwrap();
        let (corrupted, _) = inject_pll_rotation(
            &clean,
            &truth,
            scene.corruption_prob,
            scene.rng_seed ^ channel as u64,
            Granularity::PerSubcarrier,
        )
        .unwrap();
        frames.extend(corrupted.frames);
    }

    let refs: Vec<&CsiFrame> = frames.iter().collect();
    let set = OffsetObservationSet::from_frames(&refs, 0).unwrap();
    let report = correct_offsets(&set).unwrap();

    assert_eq!(report.corrected.measured_count(), GLOBAL_BIN_COUNT);
    for (g, v) in report.corrected.measured() {
        let err = wrap_to_pi(v - truth.values[g]).abs();
        assert!(
            err <= 0.01,
            "bin {g}: corrected {v}, planted {}, err {err}",
            truth.values[g]
        );
    }
    assert!(
        report.residual_spread < 0.01,
        "residual spread {}",
        report.residual_spread
    );
}

#[test]
fn per_packet_corruption_is_also_recovered() {
    let mut scene = cable_scene(77);
    scene.corruption_granularity = Granularity::PerPacket;
    let truth = scene.true_chip_offset.truth_vector().unwrap();

    let mut frames: Vec<CsiFrame> = Vec::new();
    for channel in 1u16..=13 {
        let clean = generate_multipath_csi(&scene, channel, 9).unwrap();
        let (corrupted, _) = inject_pll_rotation(
            &clean,
            &truth,
            scene.corruption_prob,
            scene.rng_seed.wrapping_mul(channel as u64 + 1),
            Granularity::PerPacket,
        )
        .unwrap();
        frames.extend(corrupted.frames);
    }

    let refs: Vec<&CsiFrame> = frames.iter().collect();
    let set = OffsetObservationSet::from_frames(&refs, 0).unwrap();
    let report = correct_offsets(&set).unwrap();
    for (g, v) in report.corrected.measured() {
        let err = wrap_to_pi(v - truth.values[g]).abs();
        assert!(err <= 0.01, "bin {g}: err {err}");
    }
}

#[test]
fn swap_calibration_through_the_pipeline() {
    let mut scene = cable_scene(5);
    scene.corruption_prob = 0.0;
    scene.cable_offset_rad = 0.3;
    let truth = scene.true_chip_offset.truth_vector().unwrap();

    let correct_for = |swapped: bool| {
        let mut frames: Vec<CsiFrame> = Vec::new();
        for channel in 1u16..=13 {
            let clean = generate_multipath_csi(&scene, channel, 2).unwrap();
            let cabled = emulate_cable_setup(&clean, scene.cable_offset_rad, swapped);
            frames.extend(cabled.frames);
        }
        let refs: Vec<&CsiFrame> = frames.iter().collect();
        let set = OffsetObservationSet::from_frames(&refs, 0).unwrap();
        correct_offsets(&set).unwrap().corrected
    };

    let direct = correct_for(false);
    let swapped = correct_for(true);
    let merged = csikit_core::offsets::swap_calibrate(&direct, &swapped).unwrap();
    for (g, v) in merged.measured() {
        let err = wrap_to_pi(v - truth.values[g]).abs();
        assert!(err <= 1e-9, "bin {g}: err {err}");
    }
}

#[test]
fn overlap_consistency_flags_match_injection_log() {
    let scene = cable_scene(0);
    let truth = scene.true_chip_offset.truth_vector().unwrap();
    let p = 0.25;

    // One packet on channels 1 and 2; their 39 shared bins have
    // coverage 2.
    let mut observations = Vec::new();
    let mut parity: Vec<Vec<bool>> = Vec::new(); // per channel, per slot
    for channel in [1u16, 2] {
        let clean = generate_multipath_csi(&scene, channel, 1).unwrap();
        let (corrupted, log) = inject_pll_rotation(
            &clean,
            &truth,
            p,
            40 + channel as u64,
            Granularity::PerSubcarrier,
        )
        .unwrap();
        let mut flips = vec![false; 56];
        for event in &log {
            if event.is_odd() {
                flips[event.slot.unwrap()] = true;
            }
        }
        parity.push(flips);
        observations.push((
            channel,
            extract_phase_offset(&corrupted.frames[0], 0).unwrap(),
        ));
    }

    let obs_refs: Vec<(usize, u16, &PhaseOffsetVector)> =
        observations.iter().map(|(c, v)| (1usize, *c, v)).collect();
    let spectrum = stitch_offsets(&obs_refs).unwrap();
    let report = overlap_consistency(&spectrum, 0.1);

    // Expected flags from the log: a shared bin disagrees iff exactly
    // one of the two deposits was parity-flipped.
    let mut expected = BTreeSet::new();
    let mut shared = 0usize;
    for k1 in -28i8..=28 {
        if k1 == 0 {
            continue;
        }
        let g = global_index(1, k1).unwrap();
        let k2 = g as isize - 16 - 28;
        if !(-28..=28).contains(&k2) || k2 == 0 {
            continue;
        }
        shared += 1;
        let slot1 = csikit_core::model::ht20_slot(k1).unwrap();
        let slot2 = csikit_core::model::ht20_slot(k2 as i8).unwrap();
        if parity[0][slot1] != parity[1][slot2] {
            expected.insert(g);
        }
    }
    assert_eq!(shared, 39);
    assert_eq!(
        report.flagged.iter().copied().collect::<BTreeSet<_>>(),
        expected
    );

    // Seeded draw: the flagged fraction sits near the corruption rate.
    let fraction = report.flagged.len() as f64 / shared as f64;
    assert!(
        (fraction - p).abs() <= 0.05,
        "flagged fraction {fraction} vs p={p}"
    );
}

#[test]
fn clean_scene_overlaps_are_consistent() {
    let mut scene = cable_scene(9);
    scene.corruption_prob = 0.0;
    let mut observations = Vec::new();
    for channel in 1u16..=13 {
        let clean = generate_multipath_csi(&scene, channel, 1).unwrap();
        observations.push((channel, extract_phase_offset(&clean.frames[0], 0).unwrap()));
    }
    let obs_refs: Vec<(usize, u16, &PhaseOffsetVector)> =
        observations.iter().map(|(c, v)| (1usize, *c, v)).collect();
    let spectrum = stitch_offsets(&obs_refs).unwrap();
    let report = overlap_consistency(&spectrum, 1e-9);
    assert!(report.flagged.is_empty());
    let max_spread = report.bins.iter().map(|b| b.spread_rad).fold(0.0, f64::max);
    assert!(max_spread < 1e-9, "max spread {max_spread}");
}

//! CLI behavior: fixture tables, error paths, config files, gzip input
//! and sidecar-driven truth columns.

use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;

use csikit_core::format::write_capture_file;
use csikit_core::model::{Band, CaptureSet, CsiFrame, SwapState, HT20_SUBCARRIER_COUNT};
use num_complex::Complex64;

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("csikit-flow-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> anyhow::Result<()> {
    csikit_cli::run(std::iter::once("csikit").chain(args.iter().copied()))
}

fn constant_offset_capture(channel: u16, phi: f64, packets: usize) -> CaptureSet {
    let frames = (0..packets)
        .map(|t| {
            let h0 = vec![Complex64::new(1.0, 0.0); HT20_SUBCARRIER_COUNT];
            let h1 = vec![Complex64::from_polar(1.0, phi); HT20_SUBCARRIER_COUNT];
            CsiFrame::new(Band::Band24, channel, t as u64, vec![h0, h1], Some(-42.0)).unwrap()
        })
        .collect();
    CaptureSet::new(frames, format!("ch{channel}"), SwapState::OverAir).unwrap()
}

const SCENE: &str = r#"
antenna_spacing_m = 0.09
corruption_prob = 0.2
noise_std = 0.0
rng_seed = 11

[[paths]]
complex_gain = [1.0, 0.0]
aoa_deg = 5.0
delay_ns = 10.0

[true_chip_offset]
kind = "constant"
value_rad = -0.12
"#;

/// The per-channel offsets characterized for the 2.4 GHz band; fed in
/// as constant fixtures, the summary table must reproduce them exactly.
const CHANNEL_OFFSET_FIXTURE: [f64; 13] = [
    -0.1628, -0.1557, -0.1477, -0.1388, -0.1303, -0.1228, -0.1163, -0.1114, -0.1079, -0.1054,
    -0.1031, -0.1044, -0.0883,
];

#[test]
fn correct_reproduces_channel_fixture_table() {
    let dir = temp_dir("fixture");
    let mut paths = Vec::new();
    for (i, &phi) in CHANNEL_OFFSET_FIXTURE.iter().enumerate() {
        let channel = (i + 1) as u16;
        let path = dir.join(format!("ch{channel:02}.csik"));
        write_capture_file(&path, &constant_offset_capture(channel, phi, 4)).unwrap();
        paths.push(path);
    }

    let out = dir.join("corr");
    let mut args = vec![
        "correct".to_string(),
        "--out".into(),
        out.display().to_string(),
    ];
    args.extend(paths.iter().map(|p| p.display().to_string()));
    let arg_refs: Vec<&str> = args.iter().map(String::as_str).collect();
    run(&arg_refs).unwrap();

    let channels = fs::read_to_string(out.join("channels.csv")).unwrap();
    let mut lines = channels.lines();
    assert_eq!(lines.next().unwrap(), "channel,packets,mean_rad,median_rad");
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], (i + 1).to_string());
        let median: f64 = fields[3].parse().unwrap();
        // One ulp of slack: the fixture phase round-trips through
        // from_polar/atan2 on its way into the capture.
        assert!(
            (median - CHANNEL_OFFSET_FIXTURE[i]).abs() < 1e-12,
            "channel {} median {median} vs fixture {}",
            i + 1,
            CHANNEL_OFFSET_FIXTURE[i]
        );
    }
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_writes_thirteen_files_with_twenty_records() {
    let dir = temp_dir("sim260");
    fs::write(dir.join("scene.toml"), SCENE).unwrap();
    run(&[
        "simulate",
        "--scene",
        dir.join("scene.toml").to_str().unwrap(),
        "--out",
        dir.join("sim").to_str().unwrap(),
        "--packets",
        "20",
        "--channels",
        "1-13",
    ])
    .unwrap();

    let mut total_records = 0usize;
    for channel in 1..=13 {
        let text = fs::read_to_string(dir.join(format!("sim/ch{channel:02}.csik"))).unwrap();
        let records = text.lines().count() - 1; // header
        assert_eq!(records, 20);
        total_records += records;
    }
    assert_eq!(total_records, 260);
    assert!(dir.join("sim/truth.toml").exists());
    assert!(dir.join("sim/config.toml").exists());
    let config = fs::read_to_string(dir.join("sim/config.toml")).unwrap();
    assert!(
        config.contains("seed = 11"),
        "persisted config must pin the seed:\n{config}"
    );
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_rejects_zero_packets() {
    let dir = temp_dir("sim0");
    fs::write(dir.join("scene.toml"), SCENE).unwrap();
    let err = run(&[
        "simulate",
        "--scene",
        dir.join("scene.toml").to_str().unwrap(),
        "--out",
        dir.join("sim").to_str().unwrap(),
        "--packets",
        "0",
    ])
    .unwrap_err();
    assert!(err.to_string().contains("packets"), "{err}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn malformed_capture_error_names_the_file() {
    let dir = temp_dir("badcap");
    let bad = dir.join("broken.csik");
    fs::write(
        &bad,
        "CSIKIT v1 antennas=2 band=24\nch=6 ts=0 rssi=NA H=1,0\n",
    )
    .unwrap();
    let err = run(&[
        "correct",
        "--out",
        dir.join("out").to_str().unwrap(),
        bad.to_str().unwrap(),
    ])
    .unwrap_err();
    let msg = format!("{err:#}");
    assert!(msg.contains("broken.csik"), "{msg}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn gzip_captures_are_read_transparently() {
    let dir = temp_dir("gz");
    let path = dir.join("ch06.csik.gz");
    write_capture_file(&path, &constant_offset_capture(6, -0.12, 4)).unwrap();
    let out = dir.join("corr");
    run(&[
        "correct",
        "--out",
        out.to_str().unwrap(),
        path.to_str().unwrap(),
    ])
    .unwrap();
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("channel_6_median_rad=-0.12"), "{summary}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn aoa_truth_column_follows_sidecar_presence() {
    let dir = temp_dir("aoatruth");
    fs::write(dir.join("scene.toml"), SCENE).unwrap();
    run(&[
        "simulate",
        "--scene",
        dir.join("scene.toml").to_str().unwrap(),
        "--out",
        dir.join("sim").to_str().unwrap(),
        "--packets",
        "4",
        "--channels",
        "1-13",
    ])
    .unwrap();

    // Scene directory with sidecar: truth column filled.
    run(&[
        "aoa",
        "--out",
        dir.join("with").to_str().unwrap(),
        dir.join("sim").to_str().unwrap(),
    ])
    .unwrap();
    let estimates = fs::read_to_string(dir.join("with/estimates.csv")).unwrap();
    let row = estimates.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(
        fields[1], "5",
        "truth column should carry the dominant path angle: {row}"
    );
    let estimate: f64 = fields[2].parse().unwrap();
    assert!((estimate - 5.0).abs() <= 1.0, "{row}");

    // Same captures without the sidecar: estimates still emitted, truth
    // empty.
    fs::remove_file(dir.join("sim/truth.toml")).unwrap();
    run(&[
        "aoa",
        "--out",
        dir.join("without").to_str().unwrap(),
        dir.join("sim").to_str().unwrap(),
    ])
    .unwrap();
    let estimates = fs::read_to_string(dir.join("without/estimates.csv")).unwrap();
    let row = estimates.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(
        fields[1], "",
        "truth column must be empty without a sidecar: {row}"
    );
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn aoa_batch_over_scene_directories() {
    let dir = temp_dir("aoabatch");
    for (name, theta) in [("east", 12.0), ("west", -16.0)] {
        let scene = format!(
            "antenna_spacing_m = 0.09\ncorruption_prob = 0.2\nnoise_std = 0.0\nrng_seed = 21\n\n\
             [[paths]]\ncomplex_gain = [1.0, 0.0]\naoa_deg = {theta}\ndelay_ns = 14.0\n\n\
             [true_chip_offset]\nkind = \"linear_ramp\"\nstart_rad = -0.17\nend_rad = -0.08\n"
        );
        fs::write(dir.join(format!("{name}.toml")), scene).unwrap();
        run(&[
            "simulate",
            "--scene",
            dir.join(format!("{name}.toml")).to_str().unwrap(),
            "--out",
            dir.join(name).to_str().unwrap(),
            "--packets",
            "6",
        ])
        .unwrap();
    }

    run(&[
        "aoa",
        "--out",
        dir.join("batch").to_str().unwrap(),
        dir.join("east").to_str().unwrap(),
        dir.join("west").to_str().unwrap(),
    ])
    .unwrap();

    let estimates = fs::read_to_string(dir.join("batch/estimates.csv")).unwrap();
    let rows: Vec<&str> = estimates.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        let truth: f64 = fields[1].parse().unwrap();
        let estimate: f64 = fields[2].parse().unwrap();
        assert!((truth - estimate).abs() <= 1.0, "{row}");
    }
    assert!(dir.join("batch/pseudospectrum_east.csv").exists());
    assert!(dir.join("batch/pseudospectrum_west.csv").exists());
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn plot_rejects_unknown_kind_and_wrong_schema() {
    let dir = temp_dir("plotkind");
    let csv = dir.join("data.csv");
    fs::write(&csv, "a,b\n1,2\n").unwrap();
    let err = run(&[
        "plot",
        "--kind",
        "sparkline",
        "--out",
        dir.join("out").to_str().unwrap(),
        csv.to_str().unwrap(),
    ])
    .unwrap_err();
    assert!(err.to_string().contains("unknown plot kind"), "{err}");

    let err = run(&[
        "plot",
        "--kind",
        "heatmap",
        "--out",
        dir.join("out").to_str().unwrap(),
        csv.to_str().unwrap(),
    ])
    .unwrap_err();
    assert!(err.to_string().contains("schema mismatch"), "{err}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_supplies_defaults_and_validates_paths() {
    let dir = temp_dir("cfg");
    fs::write(dir.join("scene.toml"), SCENE).unwrap();
    fs::write(
        dir.join("run.toml"),
        format!(
            "seed = 5\nout = \"{}\"\n[simulate]\nscene = \"{}\"\npackets = 3\nchannels = \"1,2\"\n",
            dir.join("sim").display(),
            dir.join("scene.toml").display()
        ),
    )
    .unwrap();
    run(&[
        "--config",
        dir.join("run.toml").to_str().unwrap(),
        "simulate",
    ])
    .unwrap();
    assert!(dir.join("sim/ch01.csik").exists());
    assert!(dir.join("sim/ch02.csik").exists());
    assert!(!dir.join("sim/ch03.csik").exists());
    let config = fs::read_to_string(dir.join("sim/config.toml")).unwrap();
    assert!(config.contains("seed = 5"), "{config}");

    // A chip-offset reference that does not exist fails up front.
    let err = run(&[
        "aoa",
        "--out",
        dir.join("aoa").to_str().unwrap(),
        "--chip-offset",
        dir.join("missing.csv").to_str().unwrap(),
        dir.join("sim").to_str().unwrap(),
    ])
    .unwrap_err();
    assert!(err.to_string().contains("does not exist"), "{err}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn swap_flow_recovers_cable_term_via_cli() {
    let dir = temp_dir("swapcli");
    let scene = r#"
antenna_spacing_m = 0.09
cable_offset_rad = 0.4
corruption_prob = 0.15
noise_std = 0.0
rng_seed = 3

[[paths]]
complex_gain = [1.0, 0.0]
aoa_deg = 0.0
delay_ns = 0.0

[true_chip_offset]
kind = "linear_ramp"
start_rad = -0.17
end_rad = -0.08
"#;
    fs::write(dir.join("scene.toml"), scene).unwrap();
    run(&[
        "simulate",
        "--scene",
        dir.join("scene.toml").to_str().unwrap(),
        "--out",
        dir.join("sim").to_str().unwrap(),
        "--packets",
        "8",
        "--swap",
    ])
    .unwrap();

    let mut args = vec![
        "correct".to_string(),
        "--swap".into(),
        "--out".into(),
        dir.join("corr").display().to_string(),
    ];
    for entry in fs::read_dir(dir.join("sim")).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "csik") {
            args.push(p.display().to_string());
        }
    }
    let arg_refs: Vec<&str> = args.iter().map(String::as_str).collect();
    run(&arg_refs).unwrap();

    let summary = fs::read_to_string(dir.join("corr/summary.txt")).unwrap();
    let psi_line = summary
        .lines()
        .find(|l| l.starts_with("cable_offset_estimate_rad="))
        .expect("summary must estimate the cable term");
    let psi: f64 = psi_line.split('=').nth(1).unwrap().parse().unwrap();
    assert!((psi - 0.4).abs() < 1e-6, "{psi_line}");

    // The calibrated curve matches the planted ramp.
    let correction = fs::read_to_string(dir.join("corr/correction.csv")).unwrap();
    for line in correction.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let bin: usize = fields[0].parse().unwrap();
        let corrected: f64 = fields[2].parse().unwrap();
        let planted = -0.17 + (0.09 * bin as f64 / 248.0);
        assert!(
            (corrected - planted).abs() < 1e-9,
            "{line} vs planted {planted}"
        );
    }
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn correct_rejects_swap_without_both_hookups() {
    let dir = temp_dir("swapmissing");
    let path = dir.join("ch01.csik");
    write_capture_file(&path, &constant_offset_capture(1, 0.1, 3)).unwrap();
    let err = run(&[
        "correct",
        "--swap",
        "--out",
        dir.join("out").to_str().unwrap(),
        path.to_str().unwrap(),
    ])
    .unwrap_err();
    assert!(err.to_string().contains("direct"), "{err}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn stitch_reports_coverage_and_flags() {
    let dir = temp_dir("stitchcli");
    for channel in [1u16, 2] {
        let path = dir.join(format!("ch{channel:02}.csik"));
        write_capture_file(&path, &constant_offset_capture(channel, -0.1, 2)).unwrap();
    }
    // One capture with a π-rotated packet to trip the consistency check.
    let mut rotated = constant_offset_capture(3, -0.1, 2);
    for g in rotated.frames[1].gains[1].iter_mut() {
        *g = -*g;
    }
    write_capture_file(&dir.join("ch03.csik"), &rotated).unwrap();

    run(&[
        "stitch",
        "--out",
        dir.join("out").to_str().unwrap(),
        "--tolerance",
        "0.5",
        dir.join("ch01.csik").to_str().unwrap(),
        dir.join("ch02.csik").to_str().unwrap(),
        dir.join("ch03.csik").to_str().unwrap(),
    ])
    .unwrap();

    let consistency = fs::read_to_string(dir.join("out/consistency.csv")).unwrap();
    let flagged: Vec<&str> = consistency
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",1"))
        .collect();
    // Channel 3's rotated packet disagrees with itself across packets at
    // every one of its bins.
    assert!(!flagged.is_empty());
    for line in &flagged {
        let spread: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!((spread - PI).abs() < 1e-9, "{line}");
    }
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn report_runs_over_correct_output() {
    let dir = temp_dir("report");
    let path = dir.join("ch05.csik");
    write_capture_file(&path, &constant_offset_capture(5, -0.13, 3)).unwrap();
    let out = dir.join("corr");
    run(&[
        "correct",
        "--out",
        out.to_str().unwrap(),
        path.to_str().unwrap(),
    ])
    .unwrap();
    run(&["report", out.to_str().unwrap()]).unwrap();
    fs::remove_dir_all(&dir).ok();
}

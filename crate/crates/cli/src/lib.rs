//! `csikit` command-line front end: simulate, correct, stitch, aoa,
//! plot and report, all deterministic given config + seed.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod csvio;
pub mod sidecar;
pub mod svg;

#[derive(Debug, Parser)]
#[command(name = "csikit", version, about = "CSI phase-offset toolkit")]
pub struct Cli {
    /// Run-config file providing defaults; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// RNG seed override.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic captures plus a ground-truth sidecar.
    Simulate {
        /// Scene specification file (TOML).
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Channels to simulate, e.g. `1-13` or `1,6,11`.
        #[arg(long)]
        channels: Option<String>,
        /// Packets per channel.
        #[arg(long)]
        packets: Option<usize>,
        /// Also emit swapped-cable captures.
        #[arg(long)]
        swap: bool,
    },
    /// Run the offset-correction pipeline over captures.
    Correct {
        /// Pair direct and swapped captures and cancel the cable term.
        #[arg(long)]
        swap: bool,
        /// Restrict to these channels.
        #[arg(long)]
        channels: Option<String>,
        /// Use at most N packets per channel.
        #[arg(long)]
        packets: Option<usize>,
        /// Capture files (.csik, .csik.gz).
        captures: Vec<PathBuf>,
    },
    /// Map captures onto the composite 80 MHz grid.
    Stitch {
        /// Overlap-consistency tolerance in radians.
        #[arg(long)]
        tolerance: Option<f64>,
        captures: Vec<PathBuf>,
    },
    /// Estimate angle of arrival (MUSIC + phase-slope diagnostic).
    Aoa {
        /// Assumed number of paths, or `auto` for the eigen-gap pick.
        #[arg(long, value_name = "K|auto")]
        num_paths: Option<String>,
        /// Chip-offset calibration: a correction.csv or a truth sidecar.
        #[arg(long)]
        chip_offset: Option<PathBuf>,
        /// Antenna spacing in meters.
        #[arg(long)]
        spacing: Option<f64>,
        /// Smoothing window length L.
        #[arg(long)]
        window: Option<usize>,
        /// Capture files for one scene, or scene directories for a batch.
        inputs: Vec<PathBuf>,
    },
    /// Render a CSV into a deterministic SVG figure.
    Plot {
        /// offsets | histogram | heatmap
        #[arg(long)]
        kind: String,
        input: PathBuf,
    },
    /// Pretty-print the outputs of a `correct` run.
    Report { dir: PathBuf },
}

/// Entry point shared by the binary and the test suites.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let ctx = config::Context::resolve(&cli)?;
    match &cli.command {
        Command::Simulate {
            scene,
            channels,
            packets,
            swap,
        } => commands::simulate::run(&ctx, scene.as_deref(), channels.as_deref(), *packets, *swap),
        Command::Correct {
            swap,
            channels,
            packets,
            captures,
        } => commands::correct::run(&ctx, *swap, channels.as_deref(), *packets, captures),
        Command::Stitch {
            tolerance,
            captures,
        } => commands::stitch::run(&ctx, *tolerance, captures),
        Command::Aoa {
            num_paths,
            chip_offset,
            spacing,
            window,
            inputs,
        } => commands::aoa::run(
            &ctx,
            num_paths.as_deref(),
            chip_offset.as_deref(),
            *spacing,
            *window,
            inputs,
        ),
        Command::Plot { kind, input } => commands::plot::run(&ctx, kind, input),
        Command::Report { dir } => commands::report::run(dir),
    }
}

//! The `.csik` capture format: newline-delimited UTF-8 records with an
//! explicit version header.
//!
//! ```text
//! CSIKIT v1 antennas=<M> band=<24|5> [swap=<state>] [label=<text...>]
//! ch=<n> ts=<us> rssi=<dbm|NA> H=<r,i;r,i;...>
//! ```
//!
//! Each record carries M·56 complex pairs in antenna-major order with
//! subcarriers ascending. Floats are written in Rust's shortest
//! round-trip decimal form, so `parse(serialize(set)) == set` holds
//! bit-for-bit. Files ending in `.gz` (or starting with the gzip magic)
//! are transparently (de)compressed.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use num_complex::Complex64;
use thiserror::Error;

use crate::model::{
    Band, CaptureSet, CsiFrame, SwapState, Violation, HT20_SUBCARRIER_COUNT, MAX_RX_ANTENNAS,
};

/// Magic the header line opens with.
pub const FORMAT_MAGIC: &str = "CSIKIT v1";

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line 1: malformed header: {0}")]
    Header(String),
    #[error("line {line}: {reason}")]
    Record { line: usize, reason: String },
    #[error("line {line}: subcarrier count {found}, expected {expected}")]
    SubcarrierCount {
        line: usize,
        found: usize,
        expected: usize,
    },
    #[error("line {line}: non-finite complex value at antenna {antenna}, subcarrier slot {slot}")]
    NonFinite {
        line: usize,
        antenna: usize,
        slot: usize,
    },
    #[error("line {line}: frame invalid: {violation}")]
    InvalidFrame { line: usize, violation: Violation },
    #[error("capture is not valid UTF-8: {0}")]
    Utf8(#[from] std::str::Utf8Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Serializes a capture set to the text format.
pub fn serialize_capture(set: &CaptureSet) -> String {
    let antennas = set.num_rx_antennas().unwrap_or(2);
    let band = match set.frames.first().map(|f| f.band) {
        Some(Band::Band5) => "5",
        _ => "24",
    };
    let mut out = String::new();
    let _ = write!(out, "{FORMAT_MAGIC} antennas={antennas} band={band}");
    if set.swap_state != SwapState::OverAir || !set.label.is_empty() {
        let _ = write!(out, " swap={}", set.swap_state.as_str());
    }
    if !set.label.is_empty() {
        let _ = write!(out, " label={}", set.label);
    }
    out.push('\n');

    for frame in &set.frames {
        let rssi = match frame.rssi_dbm {
            Some(r) => format!("{r}"),
            None => "NA".to_string(),
        };
        let _ = write!(
            out,
            "ch={} ts={} rssi={rssi} H=",
            frame.channel_number, frame.timestamp_us
        );
        let mut first = true;
        for row in &frame.gains {
            for g in row {
                if !first {
                    out.push(';');
                }
                let _ = write!(out, "{},{}", g.re, g.im);
                first = false;
            }
        }
        out.push('\n');
    }
    out
}

fn header_fields(line: &str) -> Result<(usize, Band, SwapState, String), ParseError> {
    let rest = line
        .strip_prefix(FORMAT_MAGIC)
        .ok_or_else(|| ParseError::Header(format!("expected `{FORMAT_MAGIC}`, got `{line}`")))?;

    // The label is the verbatim remainder of the line, so inner spacing
    // survives a round-trip.
    let (rest, label) = match rest.find(" label=") {
        Some(pos) => (&rest[..pos], rest[pos + " label=".len()..].to_string()),
        None => (rest, String::new()),
    };

    let mut antennas: Option<usize> = None;
    let mut band: Option<Band> = None;
    let mut swap = SwapState::OverAir;

    for tok in rest.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| ParseError::Header(format!("stray token `{tok}`")))?;
        match key {
            "antennas" => {
                let m: usize = value
                    .parse()
                    .map_err(|_| ParseError::Header(format!("bad antenna count `{value}`")))?;
                if m == 0 || m > MAX_RX_ANTENNAS {
                    return Err(ParseError::Header(format!(
                        "antenna count {m} outside 1..={MAX_RX_ANTENNAS}"
                    )));
                }
                antennas = Some(m);
            }
            "band" => {
                band = Some(match value {
                    "24" => Band::Band24,
                    "5" => Band::Band5,
                    other => return Err(ParseError::Header(format!("unknown band `{other}`"))),
                });
            }
            "swap" => {
                swap = SwapState::parse(value)
                    .ok_or_else(|| ParseError::Header(format!("unknown swap state `{value}`")))?;
            }
            other => return Err(ParseError::Header(format!("unknown header key `{other}`"))),
        }
    }

    let antennas = antennas.ok_or_else(|| ParseError::Header("missing antennas=".into()))?;
    let band = band.ok_or_else(|| ParseError::Header("missing band=".into()))?;
    Ok((antennas, band, swap, label))
}

/// Parses a capture from raw bytes. Every returned frame satisfies the
/// full frame invariants.
pub fn parse_capture(bytes: &[u8]) -> Result<CaptureSet, ParseError> {
    let text = std::str::from_utf8(bytes)?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| ParseError::Header("empty input, missing header".into()))?;
    let (antennas, band, swap, label) = header_fields(header)?;

    let mut frames = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        frames.push(parse_record(raw, line, antennas, band)?);
    }

    CaptureSet::new(frames, label, swap).map_err(|e| ParseError::Record {
        line: 1,
        reason: e.to_string(),
    })
}

fn parse_record(
    raw: &str,
    line: usize,
    antennas: usize,
    band: Band,
) -> Result<CsiFrame, ParseError> {
    let record_err = |reason: String| -> ParseError { ParseError::Record { line, reason } };

    let mut channel: Option<u16> = None;
    let mut ts: Option<u64> = None;
    let mut rssi: Option<Option<f64>> = None;
    let mut h: Option<&str> = None;

    for tok in raw.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| record_err(format!("stray token `{tok}`")))?;
        match key {
            "ch" => {
                channel = Some(
                    value
                        .parse()
                        .map_err(|_| record_err(format!("bad channel `{value}`")))?,
                )
            }
            "ts" => {
                ts = Some(
                    value
                        .parse()
                        .map_err(|_| record_err(format!("bad timestamp `{value}`")))?,
                )
            }
            "rssi" => {
                rssi = Some(if value == "NA" {
                    None
                } else {
                    let r: f64 = value
                        .parse()
                        .map_err(|_| record_err(format!("bad rssi `{value}`")))?;
                    if !r.is_finite() {
                        return Err(record_err(format!("non-finite rssi `{value}`")));
                    }
                    Some(r)
                })
            }
            "H" => h = Some(value),
            other => return Err(record_err(format!("unknown record key `{other}`"))),
        }
    }

    let channel = channel.ok_or_else(|| record_err("missing ch=".into()))?;
    let ts = ts.ok_or_else(|| record_err("missing ts=".into()))?;
    let rssi = rssi.ok_or_else(|| record_err("missing rssi=".into()))?;
    let h = h.ok_or_else(|| record_err("missing H=".into()))?;

    let pairs: Vec<&str> = h.split(';').collect();
    if pairs.len() != antennas * HT20_SUBCARRIER_COUNT {
        // Report in subcarrier units when the count divides evenly.
        if pairs.len().is_multiple_of(antennas) {
            return Err(ParseError::SubcarrierCount {
                line,
                found: pairs.len() / antennas,
                expected: HT20_SUBCARRIER_COUNT,
            });
        }
        return Err(record_err(format!(
            "H has {} complex pairs, expected {}",
            pairs.len(),
            antennas * HT20_SUBCARRIER_COUNT
        )));
    }

    let mut gains = vec![Vec::with_capacity(HT20_SUBCARRIER_COUNT); antennas];
    for (i, pair) in pairs.iter().enumerate() {
        let (antenna, slot) = (i / HT20_SUBCARRIER_COUNT, i % HT20_SUBCARRIER_COUNT);
        let (re_s, im_s) = pair
            .split_once(',')
            .ok_or_else(|| record_err(format!("bad complex pair `{pair}`")))?;
        let re: f64 = re_s
            .parse()
            .map_err(|_| record_err(format!("bad real part `{re_s}`")))?;
        let im: f64 = im_s
            .parse()
            .map_err(|_| record_err(format!("bad imaginary part `{im_s}`")))?;
        if !re.is_finite() || !im.is_finite() {
            return Err(ParseError::NonFinite {
                line,
                antenna,
                slot,
            });
        }
        gains[antenna].push(Complex64::new(re, im));
    }

    CsiFrame::new(band, channel, ts, gains, rssi).map_err(|e| match e {
        crate::model::ModelError::InvalidFrame(v) => {
            ParseError::InvalidFrame { line, violation: v }
        }
        other => record_err(other.to_string()),
    })
}

fn looks_gzipped(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b
}

/// Reads a capture file, decompressing when the content is gzipped.
pub fn read_capture_file(path: &Path) -> Result<CaptureSet, ParseError> {
    let raw = fs::read(path)?;
    if looks_gzipped(&raw) {
        let mut decoder = GzDecoder::new(raw.as_slice());
        let mut text = Vec::new();
        decoder.read_to_end(&mut text)?;
        parse_capture(&text)
    } else {
        parse_capture(&raw)
    }
}

/// Writes a capture file; a `.gz` suffix selects gzip compression.
pub fn write_capture_file(path: &Path, set: &CaptureSet) -> Result<(), ParseError> {
    let text = serialize_capture(set);
    if path.extension().is_some_and(|e| e == "gz") {
        let file = fs::File::create(path)?;
        let mut encoder = GzEncoder::new(file, flate2::Compression::default());
        encoder.write_all(text.as_bytes())?;
        encoder.finish()?;
    } else {
        fs::write(path, text)?;
    }
    Ok(())
}

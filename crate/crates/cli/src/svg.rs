//! Deterministic SVG figures: fixed canvas, fixed palette, fixed float
//! formatting, no timestamps — byte-stable for golden-file testing.

use std::fmt::Write as _;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 48.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

struct Axes {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Axes {
    fn x(&self, v: f64) -> f64 {
        MARGIN_LEFT
            + (v - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT
            - MARGIN_BOTTOM
            - (v - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn open_svg(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" height=\"{HEIGHT:.0}\" \
         viewBox=\"0 0 {WIDTH:.0} {HEIGHT:.0}\">\n\
         <rect width=\"{WIDTH:.0}\" height=\"{HEIGHT:.0}\" fill=\"#ffffff\"/>\n\
         <text x=\"{:.1}\" y=\"22\" font-family=\"monospace\" font-size=\"15\" \
         text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn axes_frame(out: &mut String, axes: &Axes, x_label: &str, y_label: &str) {
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    let _ = writeln!(
        out,
        "<rect x=\"{x0:.1}\" y=\"{y1:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" \
         stroke=\"#333333\" stroke-width=\"1\"/>",
        x1 - x0,
        y0 - y1
    );
    for i in 0..=4 {
        let fx = axes.x_min + (axes.x_max - axes.x_min) * i as f64 / 4.0;
        let px = axes.x(fx);
        let _ = write!(
            out,
            "<line x1=\"{px:.1}\" y1=\"{y0:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#333333\"/>\n\
             <text x=\"{px:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\" \
             text-anchor=\"middle\">{fx:.3}</text>\n",
            y0 + 5.0,
            y0 + 18.0
        );
        let fy = axes.y_min + (axes.y_max - axes.y_min) * i as f64 / 4.0;
        let py = axes.y(fy);
        let _ = write!(
            out,
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{x0:.1}\" y2=\"{py:.1}\" stroke=\"#333333\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\" \
             text-anchor=\"end\">{fy:.3}</text>\n",
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0
        );
    }
    let _ = write!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\" \
         text-anchor=\"middle\">{}</text>\n\
         <text x=\"16\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 12.0,
        escape(x_label),
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

fn finite_bounds<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        if v.is_finite() {
            min = min.min(v);
            max = max.max(v);
        }
    }
    if !min.is_finite() || !max.is_finite() {
        (0.0, 1.0)
    } else if min == max {
        (min - 0.5, max + 0.5)
    } else {
        let pad = (max - min) * 0.05;
        (min - pad, max + pad)
    }
}

/// Multi-series line plot (offset-vs-subcarrier figures).
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    let mut out = String::new();
    open_svg(&mut out, title);

    let (x_min, x_max) = finite_bounds(
        series
            .iter()
            .flat_map(|(_, pts)| pts.iter().map(|(x, _)| x)),
    );
    let (y_min, y_max) = finite_bounds(
        series
            .iter()
            .flat_map(|(_, pts)| pts.iter().map(|(_, y)| y)),
    );
    let axes = Axes {
        x_min,
        x_max,
        y_min,
        y_max,
    };
    axes_frame(&mut out, &axes, x_label, y_label);

    for (i, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for &(x, y) in points {
            if !x.is_finite() || !y.is_finite() {
                pen_down = false;
                continue;
            }
            let cmd = if pen_down { 'L' } else { 'M' };
            let _ = write!(path, "{cmd}{:.2} {:.2} ", axes.x(x), axes.y(y));
            pen_down = true;
        }
        let _ = writeln!(
            out,
            "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.3\"/>",
            path.trim_end()
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\" \
             fill=\"{color}\">{}</text>",
            WIDTH - MARGIN_RIGHT - 150.0,
            MARGIN_TOP + 14.0 * (i as f64 + 1.0),
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Fixed-range histogram (offset-distribution figures).
pub fn histogram(
    title: &str,
    x_label: &str,
    values: &[f64],
    bins: usize,
    range: (f64, f64),
) -> String {
    let mut counts = vec![0usize; bins];
    let width = (range.1 - range.0) / bins as f64;
    for &v in values {
        if v.is_finite() && v >= range.0 && v <= range.1 {
            let idx = (((v - range.0) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
    }
    let peak = counts.iter().copied().max().unwrap_or(0).max(1);

    let mut out = String::new();
    open_svg(&mut out, title);
    let axes = Axes {
        x_min: range.0,
        x_max: range.1,
        y_min: 0.0,
        y_max: peak as f64,
    };
    axes_frame(&mut out, &axes, x_label, "count");
    for (i, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let x = axes.x(range.0 + i as f64 * width);
        let x_next = axes.x(range.0 + (i + 1) as f64 * width);
        let y = axes.y(count as f64);
        let _ = writeln!(
            out,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"#1f77b4\" stroke=\"#ffffff\" stroke-width=\"0.5\"/>",
            x_next - x,
            HEIGHT - MARGIN_BOTTOM - y
        );
    }
    out.push_str("</svg>\n");
    out
}

fn heat_color(t: f64) -> String {
    // Dark blue → yellow ramp, fixed arithmetic.
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * t).round() as u8;
    let g = (224.0 * t * t).round() as u8;
    let b = (96.0 + 64.0 * (1.0 - t)).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Pseudospectrum heatmap with the peak marked; power is shown on a
/// log scale.
pub fn heatmap(
    title: &str,
    x_values: &[f64],
    y_values: &[f64],
    power: &[Vec<f64>],
    peak: (f64, f64),
) -> String {
    let mut out = String::new();
    open_svg(&mut out, title);
    let axes = Axes {
        x_min: x_values[0],
        x_max: *x_values.last().unwrap(),
        y_min: y_values[0],
        y_max: *y_values.last().unwrap(),
    };
    axes_frame(&mut out, &axes, "tau_ns", "theta_deg");

    let logs: Vec<Vec<f64>> = power
        .iter()
        .map(|row| {
            row.iter()
                .map(|&p| p.max(f64::MIN_POSITIVE).log10())
                .collect()
        })
        .collect();
    let (lo, hi) = finite_bounds(logs.iter().flatten());

    for (yi, row) in logs.iter().enumerate() {
        for (xi, &v) in row.iter().enumerate() {
            let x = axes.x(x_values[xi]);
            let x1 = axes.x(x_values[(xi + 1).min(x_values.len() - 1)]);
            let y = axes.y(y_values[(yi + 1).min(y_values.len() - 1)]);
            let y1 = axes.y(y_values[yi]);
            let w = if xi + 1 < x_values.len() { x1 - x } else { 2.0 };
            let h = if yi + 1 < y_values.len() { y1 - y } else { 2.0 };
            let _ = writeln!(
                out,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" \
                 fill=\"{}\"/>",
                heat_color((v - lo) / (hi - lo))
            );
        }
    }
    let _ = writeln!(
        out,
        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"6\" fill=\"none\" stroke=\"#ffffff\" \
         stroke-width=\"2\"/>",
        axes.x(peak.0),
        axes.y(peak.1)
    );
    out.push_str("</svg>\n");
    out
}

//! Minimal SVG line charts for sweep results and beam patterns.
//!
//! Self-contained vector output: axes with rounded tick labels, one
//! polyline per series, an optional translucent min/max band, and a
//! legend. No drawing library, just coordinate mapping into an SVG
//! document.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("nothing to plot")]
    Empty,
    #[error("non-finite value in series {0}")]
    NonFinite(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One labeled curve, optionally wrapped in a (lower, upper) envelope.
#[derive(Debug, Clone)]
pub struct LineSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Per-x lower and upper band edges, drawn as a translucent region.
    pub band: Vec<(f64, f64, f64)>,
}

impl LineSeries {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, band: Vec::new() }
    }
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 56.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Largest 1/2/5-ladder step that yields at most `target` intervals.
fn nice_step(range: f64, target: usize) -> f64 {
    let raw = range / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(min: f64, max: f64) -> Vec<f64> {
    let step = nice_step(max - min, 5);
    let mut v = Vec::new();
    let mut k = (min / step).ceil();
    while k * step <= max + step * 1e-9 {
        // Re-quantize so labels print as clean decimals.
        v.push((k * step * 1e10).round() / 1e10);
        k += 1.0;
    }
    v
}

fn format_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.1e}")
    } else {
        format!("{v}")
    }
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN_LEFT + (v - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        MARGIN_TOP
            + (1.0 - (v - self.y_min) / (self.y_max - self.y_min))
                * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

/// Renders the series into a complete SVG document.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[LineSeries],
) -> Result<String, PlotError> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(PlotError::Empty);
    }
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            if !x.is_finite() || !y.is_finite() {
                return Err(PlotError::NonFinite(s.label.clone()));
            }
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
        for &(x, lo, hi) in &s.band {
            if !x.is_finite() || !lo.is_finite() || !hi.is_finite() {
                return Err(PlotError::NonFinite(s.label.clone()));
            }
            y_min = y_min.min(lo);
            y_max = y_max.max(hi);
        }
    }
    if x_min == x_max {
        x_min -= 1.0;
        x_max += 1.0;
    }
    if y_min == y_max {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let pad = (y_max - y_min) * 0.05;
    let frame = Frame { x_min, x_max, y_min: y_min - pad, y_max: y_max + pad };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));

    for t in ticks(frame.x_min, frame.x_max) {
        let px = frame.x(t);
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"#ddd\"/>\n",
            MARGIN_TOP,
            HEIGHT - MARGIN_BOTTOM
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
            HEIGHT - MARGIN_BOTTOM + 18.0,
            format_tick(t)
        ));
    }
    for t in ticks(frame.y_min, frame.y_max) {
        let py = frame.y(t);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{}\" y2=\"{py:.2}\" stroke=\"#ddd\"/>\n",
            MARGIN_LEFT,
            WIDTH - MARGIN_RIGHT
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"12\">{}</text>\n",
            MARGIN_LEFT - 6.0,
            py + 4.0,
            format_tick(t)
        ));
    }
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN_LEFT,
        HEIGHT - MARGIN_BOTTOM,
        WIDTH - MARGIN_RIGHT,
        HEIGHT - MARGIN_BOTTOM
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN_LEFT, MARGIN_TOP, MARGIN_LEFT,
        HEIGHT - MARGIN_BOTTOM
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" \
         transform=\"rotate(-90 18 {})\">{}</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    ));

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !s.band.is_empty() {
            let mut pts = String::new();
            for &(x, _, hi) in &s.band {
                pts.push_str(&format!("{:.2},{:.2} ", frame.x(x), frame.y(hi)));
            }
            for &(x, lo, _) in s.band.iter().rev() {
                pts.push_str(&format!("{:.2},{:.2} ", frame.x(x), frame.y(lo)));
            }
            svg.push_str(&format!(
                "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n",
                pts.trim_end()
            ));
        }
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            pts.join(" ")
        ));
        let ly = MARGIN_TOP + 16.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT - 150.0;
        svg.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            lx + 24.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
            lx + 30.0,
            ly + 4.0,
            escape(&s.label)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes the document to disk.
pub fn write_svg(path: &Path, svg: &str) -> Result<(), PlotError> {
    fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo() -> Vec<LineSeries> {
        vec![
            LineSeries {
                label: "mean".into(),
                points: vec![(0.0, 1.0), (1.0, 3.0), (2.0, 2.0)],
                band: vec![(0.0, 0.5, 1.5), (1.0, 2.0, 4.0), (2.0, 1.0, 3.0)],
            },
            LineSeries::new("other", vec![(0.0, 0.0), (2.0, 1.0)]),
        ]
    }

    #[test]
    fn chart_contains_expected_elements() {
        let svg = line_chart("Demo & check", "x", "y", &demo()).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<polygon").count(), 1);
        assert!(svg.contains("Demo &amp; check"));
        assert!(svg.contains(">mean</text>"));
    }

    #[test]
    fn corners_map_to_frame_edges() {
        let frame = Frame { x_min: 0.0, x_max: 2.0, y_min: 0.0, y_max: 4.0 };
        assert_eq!(frame.x(0.0), MARGIN_LEFT);
        assert_eq!(frame.x(2.0), WIDTH - MARGIN_RIGHT);
        assert_eq!(frame.y(4.0), MARGIN_TOP);
        assert_eq!(frame.y(0.0), HEIGHT - MARGIN_BOTTOM);
        assert_eq!(frame.y(2.0), (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0);
    }

    #[test]
    fn ticks_use_round_steps() {
        assert_eq!(nice_step(10.0, 5), 2.0);
        assert_eq!(nice_step(7.0, 5), 2.0);
        assert_eq!(nice_step(0.4, 5), 0.1);
        assert_eq!(ticks(0.0, 10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let t = ticks(39.0, 101.0);
        assert!(t.contains(&40.0) && t.contains(&100.0));
    }

    #[test]
    fn degenerate_ranges_are_padded() {
        let one = vec![LineSeries::new("p", vec![(5.0, 7.0)])];
        let svg = line_chart("t", "x", "y", &one).unwrap();
        assert!(svg.contains("<polyline"));
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(matches!(line_chart("t", "x", "y", &[]), Err(PlotError::Empty)));
        let nan = vec![LineSeries::new("bad", vec![(0.0, f64::NAN)])];
        assert!(matches!(
            line_chart("t", "x", "y", &nan),
            Err(PlotError::NonFinite(_))
        ));
    }

    #[test]
    fn svg_round_trips_to_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chart.svg");
        let svg = line_chart("t", "x", "y", &demo()).unwrap();
        write_svg(&path, &svg).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), svg);
    }
}

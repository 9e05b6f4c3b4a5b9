//! Self-contained SVG scatter plots and histograms.

use std::fmt::Write;

use crate::CliError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const TICKS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Scatter(Vec<(f64, f64)>),
    /// Raw values; `bins` defaults to ⌈√N⌉.
    Histogram { values: Vec<f64>, bins: Option<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub layer: Layer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn edges(&self) -> Vec<f64> {
        (0..=self.counts.len())
            .map(|i| self.lo + i as f64 * self.width)
            .collect()
    }
}

/// Equal-width bins spanning `[min, max]`; the maximum lands in the last
/// bin. All-equal input gets one unit-wide span centred on the value.
pub fn histogram(values: &[f64], bins: Option<usize>) -> Result<Histogram, CliError> {
    if values.is_empty() {
        return Err(CliError::Invalid("histogram of no values".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Invalid("histogram values must be finite".into()));
    }
    let bins = bins.unwrap_or_else(|| (values.len() as f64).sqrt().ceil() as usize).max(1);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, span) = if max > min { (min, max - min) } else { (min - 0.5, 1.0) };
    let width = span / bins as f64;
    let mut counts = vec![0; bins];
    for &v in values {
        let i = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[i] += 1;
    }
    Ok(Histogram { lo, width, counts })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e5) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.into() }
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn padded(lo: f64, hi: f64) -> (f64, f64) {
        if hi > lo {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn axes(out: &mut String, fig: &Figure, frame: &Frame) {
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        out,
        r#"<line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>"#
    );
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let xv = frame.x.0 + t * (frame.x.1 - frame.x.0);
        let yv = frame.y.0 + t * (frame.y.1 - frame.y.0);
        let (px, py) = (frame.px(xv), frame.py(yv));
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
            y0 + 5.0,
            y0 + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        TOP / 2.0 + 5.0,
        escape(&fig.title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(&fig.x_label)
    );
    let cy = (y0 + y1) / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="16" y="{cy:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {cy:.2})">{}</text>"#,
        escape(&fig.y_label)
    );
}

pub fn render_svg(fig: &Figure) -> Result<String, CliError> {
    let mut body = String::new();
    let frame = match &fig.layer {
        Layer::Scatter(points) => {
            if points.is_empty() {
                return Err(CliError::Invalid("scatter plot of no points".into()));
            }
            if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                return Err(CliError::Invalid("scatter points must be finite".into()));
            }
            let fold = |f: fn(&(f64, f64)) -> f64| {
                let lo = points.iter().map(f).fold(f64::INFINITY, f64::min);
                let hi = points.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
                Frame::padded(lo, hi)
            };
            let frame = Frame {
                x: fold(|p| p.0),
                y: fold(|p| p.1),
            };
            for &(x, y) in points {
                let _ = writeln!(
                    body,
                    r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="2.5" fill="steelblue" fill-opacity="0.7"/>"#,
                    frame.px(x),
                    frame.py(y)
                );
            }
            frame
        }
        Layer::Histogram { values, bins } => {
            let h = histogram(values, *bins)?;
            let edges = h.edges();
            let top = *h.counts.iter().max().expect("at least one bin") as f64;
            let frame = Frame {
                x: (edges[0], edges[edges.len() - 1]),
                y: (0.0, top * 1.05),
            };
            for (i, &c) in h.counts.iter().enumerate() {
                let (x0, x1) = (frame.px(edges[i]), frame.px(edges[i + 1]));
                let (y0, y1) = (frame.py(c as f64), frame.py(0.0));
                let _ = writeln!(
                    body,
                    r#"<rect class="bar" data-count="{c}" x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="steelblue" stroke="white"/>"#,
                    x1 - x0,
                    y1 - y0
                );
            }
            frame
        }
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    axes(&mut out, fig, &frame);
    out.push_str(&body);
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_equal_values_share_one_bin() {
        let h = histogram(&[2.0; 9], None).unwrap();
        assert_eq!(h.counts.len(), 3);
        assert_eq!(h.counts.iter().sum::<usize>(), 9);
    }

    #[test]
    fn maximum_goes_in_last_bin() {
        let h = histogram(&[0.0, 1.0, 2.0, 3.0], Some(3)).unwrap();
        assert_eq!(h.counts, vec![1, 1, 2]);
    }

    #[test]
    fn empty_input_rejected() {
        let fig = Figure {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            layer: Layer::Scatter(vec![]),
        };
        assert!(render_svg(&fig).is_err());
    }

    #[test]
    fn labels_escaped() {
        let fig = Figure {
            title: "a < b & c".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            layer: Layer::Scatter(vec![(0.0, 1.0)]),
        };
        assert!(render_svg(&fig).unwrap().contains("a &lt; b &amp; c"));
    }
}

//! Deterministic SVG rendering: fixed canvas, fixed palette, fixed number
//! formatting, no timestamps.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write;
use std::path::Path;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 48.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Line,
    Step,
    Histogram,
    Overlay,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Series {
    Points { label: String, xs: Vec<f64>, ys: Vec<f64> },
    /// A union of intervals, e.g. a spectral set estimate.
    Intervals { label: String, intervals: Vec<(f64, f64)> },
}

impl Series {
    fn label(&self) -> &str {
        match self {
            Series::Points { label, .. } | Series::Intervals { label, .. } => label,
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Series::Points { xs, .. } => xs.is_empty(),
            Series::Intervals { intervals, .. } => intervals.is_empty(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlotOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub y_range: Option<(f64, f64)>,
    pub bins: usize,
}

/// Reads a CSV series. Files with an `a,b` header become intervals;
/// otherwise `x_col` and `y_col` (names, defaulting to the first two
/// columns) become points. A histogram only needs `x_col`.
pub fn read_series(path: &Path, x_col: Option<&str>, y_col: Option<&str>, need_y: bool) -> Result<Series> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let column = |name: Option<&str>, default: usize| -> Result<usize> {
        match name {
            Some(n) => headers.iter().position(|h| h == n).with_context(|| format!("{} has no column {n:?}", path.display())),
            None if default < headers.len() => Ok(default),
            None => bail!("{} has fewer than {} columns", path.display(), default + 1),
        }
    };
    let intervals = headers.len() >= 2 && headers[0] == "a" && headers[1] == "b" && x_col.is_none();
    let xi = column(x_col, 0)?;
    let yi = if need_y || intervals { Some(column(y_col, 1)?) } else { None };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            let field = record.get(i).with_context(|| format!("{} row {}: missing field", path.display(), row + 2))?;
            let v: f64 = field.trim().parse().with_context(|| format!("{} row {}: {field:?} is not a number", path.display(), row + 2))?;
            if !v.is_finite() {
                bail!("{} row {}: non-finite value", path.display(), row + 2);
            }
            Ok(v)
        };
        xs.push(parse(xi)?);
        if let Some(yi) = yi {
            ys.push(parse(yi)?);
        }
    }
    if intervals {
        return Ok(Series::Intervals { label, intervals: xs.into_iter().zip(ys).collect() });
    }
    Ok(Series::Points { label, xs, ys })
}

/// Whether a CSV carries a shift function (`x,u` header).
pub fn is_shift_csv(path: &Path) -> bool {
    csv::Reader::from_path(path)
        .and_then(|mut r| r.headers().map(|h| h.iter().collect::<Vec<_>>() == ["x", "u"]))
        .unwrap_or(false)
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.02 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

pub fn render(series: &[Series], style: Style, opts: &PlotOptions) -> Result<String> {
    if series.is_empty() || series.iter().any(Series::is_empty) {
        bail!("empty series");
    }
    if style != Style::Overlay && series.len() > 1 {
        bail!("style {style:?} takes a single series; use overlay for several");
    }
    let mut body = String::new();
    let frame = match style {
        Style::Histogram => {
            let Series::Points { xs, .. } = &series[0] else { bail!("histogram needs a value column") };
            histogram(xs, opts, &mut body)?
        }
        _ => curves(series, style, opts, &mut body)?,
    };

    let mut svg = String::new();
    writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#)?;
    writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#)?;
    writeln!(svg, r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(&opts.title))?;
    axes(&frame, opts, &mut svg)?;
    svg.push_str(&body);
    if series.len() > 1 {
        for (k, s) in series.iter().enumerate() {
            let y = MARGIN_TOP + 14.0 + 16.0 * k as f64;
            let x = WIDTH - MARGIN_RIGHT - 150.0;
            writeln!(svg, r#"<line x1="{x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"/>"#, y - 4.0, x + 18.0, y - 4.0, PALETTE[k % PALETTE.len()])?;
            writeln!(svg, r#"<text x="{:.2}" y="{y:.2}" font-family="sans-serif" font-size="11">{}</text>"#, x + 24.0, escape(s.label()))?;
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn curves(series: &[Series], style: Style, opts: &PlotOptions, body: &mut String) -> Result<Frame> {
    let mut x0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    let mut y0 = f64::INFINITY;
    let mut y1 = f64::NEG_INFINITY;
    for s in series {
        match s {
            Series::Points { xs, ys, .. } => {
                if ys.len() != xs.len() {
                    bail!("series {} has no y column", s.label());
                }
                for (&x, &y) in xs.iter().zip(ys) {
                    x0 = x0.min(x);
                    x1 = x1.max(x);
                    y0 = y0.min(y);
                    y1 = y1.max(y);
                }
            }
            Series::Intervals { intervals, .. } => {
                for &(a, b) in intervals {
                    x0 = x0.min(a);
                    x1 = x1.max(b);
                }
            }
        }
    }
    let interval_rows = series.iter().filter(|s| matches!(s, Series::Intervals { .. })).count();
    if y0 > y1 {
        (y0, y1) = (0.0, interval_rows as f64 + 1.0);
    }
    let (y0, y1) = opts.y_range.unwrap_or_else(|| padded(y0, y1));
    let (x0, x1) = padded(x0, x1);
    let frame = Frame { x0, x1, y0, y1 };
    let mut row = 0;
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        match s {
            Series::Points { xs, ys, .. } => {
                let mut d = String::new();
                for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
                    if i == 0 {
                        write!(d, "M{:.2},{:.2}", frame.px(x), frame.py(y))?;
                    } else if style == Style::Step {
                        write!(d, " H{:.2} V{:.2}", frame.px(x), frame.py(y))?;
                    } else {
                        write!(d, " L{:.2},{:.2}", frame.px(x), frame.py(y))?;
                    }
                }
                writeln!(body, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#)?;
            }
            Series::Intervals { intervals, .. } => {
                row += 1;
                let band = (frame.py(y0) - frame.py(y1)) / (interval_rows as f64 + 1.0);
                let y = frame.py(y0) - band * row as f64 - 0.25 * band;
                for &(a, b) in intervals {
                    writeln!(
                        body,
                        r#"<rect x="{:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.6"/>"#,
                        frame.px(a),
                        (frame.px(b) - frame.px(a)).max(0.5),
                        0.5 * band
                    )?;
                }
            }
        }
    }
    Ok(frame)
}

fn histogram(values: &[f64], opts: &PlotOptions, body: &mut String) -> Result<Frame> {
    if opts.bins == 0 {
        bail!("histogram needs at least one bin");
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let width = (hi - lo) / opts.bins as f64;
    let mut counts = vec![0usize; opts.bins];
    for &v in values {
        counts[(((v - lo) / width) as usize).min(opts.bins - 1)] += 1;
    }
    // normalized to unit area
    let density: Vec<f64> = counts.iter().map(|&c| c as f64 / (values.len() as f64 * width)).collect();
    let top = density.iter().copied().fold(0.0, f64::max);
    let frame = Frame { x0: lo, x1: hi, y0: 0.0, y1: opts.y_range.map_or(1.05 * top, |r| r.1) };
    for (k, &d) in density.iter().enumerate() {
        let a = lo + k as f64 * width;
        writeln!(
            body,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}" stroke="#ffffff" stroke-width="0.5"/>"##,
            frame.px(a),
            frame.py(d),
            frame.px(a + width) - frame.px(a),
            frame.py(0.0) - frame.py(d),
            PALETTE[0]
        )?;
    }
    Ok(frame)
}

fn axes(frame: &Frame, opts: &PlotOptions, svg: &mut String) -> Result<()> {
    let (left, right) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (top, bottom) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    writeln!(svg, r##"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333333"/>"##, right - left, bottom - top)?;
    for k in 0..=4 {
        let x = frame.x0 + (frame.x1 - frame.x0) * k as f64 / 4.0;
        let px = frame.px(x);
        writeln!(svg, r##"<line x1="{px:.2}" y1="{bottom:.2}" x2="{px:.2}" y2="{:.2}" stroke="#333333"/>"##, bottom + 4.0)?;
        writeln!(svg, r#"<text x="{px:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#, bottom + 16.0, tick_label(x))?;
    }
    let pi_axis = (frame.y0, frame.y1) == (0.0, PI);
    for k in 0..=4 {
        let y = frame.y0 + (frame.y1 - frame.y0) * k as f64 / 4.0;
        let py = frame.py(y);
        let label = if pi_axis { ["0", "π/4", "π/2", "3π/4", "π"][k].to_string() } else { tick_label(y) };
        writeln!(svg, r##"<line x1="{:.2}" y1="{py:.2}" x2="{left:.2}" y2="{py:.2}" stroke="#333333"/>"##, left - 4.0)?;
        writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{label}</text>"#, left - 6.0, py + 4.0)?;
    }
    writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#, (left + right) / 2.0, HEIGHT - 10.0, escape(&opts.x_label))?;
    writeln!(
        svg,
        r#"<text x="14" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(&opts.y_label)
    )?;
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

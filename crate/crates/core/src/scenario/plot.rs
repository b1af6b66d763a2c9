//! Minimal self-contained SVG charts rendered from a result directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::export::{fmt12, read_table_csv};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: (f64, f64, f64, f64) = (60.0, 20.0, 40.0, 50.0); // left, right, top, bottom
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(x: f64) -> String {
    let s = fmt12((x * 1e6).round() / 1e6);
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN.0 + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN.0 - MARGIN.1)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN.3 - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN.2 - MARGIN.3)
    }
}

fn open(svg: &mut String, title: &str) {
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>
"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(svg: &mut String, f: &Frame, xlabel: &str, ylabel: &str, xticks: bool) {
    let (x0, x1) = (MARGIN.0, WIDTH - MARGIN.1);
    let (y0, y1) = (HEIGHT - MARGIN.3, MARGIN.2);
    let _ = writeln!(
        svg,
        r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    if xticks {
        for t in nice_ticks(f.x.0, f.x.1) {
            let x = f.px(t);
            let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/>"#, y0 + 5.0);
            let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, y0 + 18.0, label(t));
        }
    }
    for t in nice_ticks(f.y.0, f.y.1) {
        let y = f.py(t);
        let _ = writeln!(svg, r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(svg, r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#ddd"/>"##);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, y + 4.0, label(t));
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn legend(svg: &mut String, labels: &[(String, &str, bool)]) {
    for (i, (text, colour, dashed)) in labels.iter().enumerate() {
        let y = MARGIN.2 + 14.0 + 16.0 * i as f64;
        let x = WIDTH - MARGIN.1 - 150.0;
        let dash = if *dashed { r#" stroke-dasharray="5,3""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{colour}" stroke-width="2"{dash}/>"#,
            x + 20.0
        );
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, x + 26.0, y + 4.0, escape(text));
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let x = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let x = (x.0 + 0.05 / 1.1 * (x.1 - x.0), x.1 - 0.05 / 1.1 * (x.1 - x.0));
    let f = Frame { x, y: bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1))) };
    let mut svg = String::new();
    open(&mut svg, title);
    axes(&mut svg, &f, xlabel, ylabel, true);
    let mut labels = Vec::new();
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut path = String::new();
        for (k, (x, y)) in s.points.iter().enumerate() {
            let _ = write!(path, "{}{:.2},{:.2}", if k == 0 { "M" } else { " L" }, f.px(*x), f.py(*y));
        }
        let dash = if s.dashed { r#" stroke-dasharray="5,3""# } else { "" };
        let _ = writeln!(svg, r#"<path d="{path}" fill="none" stroke="{colour}" stroke-width="1.5"{dash}/>"#);
        labels.push((s.label.clone(), colour, s.dashed));
    }
    legend(&mut svg, &labels);
    svg.push_str("</svg>\n");
    svg
}

/// One group of bars per category, one bar per series within a group.
pub fn bar_chart(title: &str, ylabel: &str, categories: &[String], series: &[(String, Vec<f64>)]) -> String {
    let mut y = bounds(series.iter().flat_map(|s| s.1.iter().copied()).chain([0.0]));
    y.0 = y.0.min(0.0);
    let f = Frame { x: (0.0, categories.len() as f64), y };
    let mut svg = String::new();
    open(&mut svg, title);
    axes(&mut svg, &f, "emitter", ylabel, false);
    let group = (f.px(1.0) - f.px(0.0)) * 0.8;
    let bar = group / series.len().max(1) as f64;
    let zero = f.py(0.0);
    for (c, name) in categories.iter().enumerate() {
        let left = f.px(c as f64) + 0.1 * (f.px(1.0) - f.px(0.0));
        for (s, (_, values)) in series.iter().enumerate() {
            let v = values[c];
            let top = f.py(v).min(zero);
            let h = (f.py(v) - zero).abs();
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{h:.2}" fill="{}"/>"#,
                left + s as f64 * bar,
                bar * 0.9,
                PALETTE[s % PALETTE.len()]
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            left + group / 2.0,
            HEIGHT - MARGIN.3 + 18.0,
            escape(name)
        );
    }
    let _ = writeln!(
        svg,
        r#"<line x1="{}" y1="{zero:.2}" x2="{}" y2="{zero:.2}" stroke="black"/>"#,
        MARGIN.0,
        WIDTH - MARGIN.1
    );
    let labels: Vec<(String, &str, bool)> =
        series.iter().enumerate().map(|(i, s)| (s.0.clone(), PALETTE[i % PALETTE.len()], false)).collect();
    legend(&mut svg, &labels);
    svg.push_str("</svg>\n");
    svg
}

fn column(header: &[String], name: &str) -> Option<usize> {
    header.iter().position(|h| h == name)
}

type Table = (Vec<String>, Vec<Vec<f64>>);

fn load(path: &Path) -> Result<Option<Table>> {
    if !path.exists() {
        return Ok(None);
    }
    let (header, rows) = read_table_csv(path)?;
    if rows.is_empty() {
        return Err(Error::Empty(format!("{} has no data rows", path.display())));
    }
    Ok(Some((header, rows)))
}

fn xy(rows: &[Vec<f64>], x: usize, y: usize) -> Vec<(f64, f64)> {
    rows.iter().map(|r| (r[x], r[y])).collect()
}

/// Renders every chart the CSV files in `dir` support and returns the paths
/// written. All inputs are read before anything is written.
pub fn emit_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    let trajectory = load(&dir.join("trajectory.csv"))?;
    let spectrum = load(&dir.join("input_spectrum.csv"))?;
    let amplitudes = load(&dir.join("amplitudes.csv"))?;
    if trajectory.is_none() && spectrum.is_none() && amplitudes.is_none() {
        return Err(Error::Empty(format!("no result files in {}", dir.display())));
    }

    let mut charts: Vec<(&str, String)> = Vec::new();
    if let Some((header, rows)) = &spectrum {
        let mut series = Vec::new();
        for (col, label, dashed) in [
            ("re_right", "Re β̃_R", false),
            ("im_right", "Im β̃_R", true),
            ("re_left", "Re β̃_L", false),
            ("im_left", "Im β̃_L", true),
        ] {
            if let Some(c) = column(header, col) {
                series.push(Series { label: label.into(), points: xy(rows, 0, c), dashed });
            }
        }
        charts.push(("spectrum.svg", line_chart("Input photon spectrum", "δω / Γ", "amplitude", &series)));
    }
    if let Some((header, rows)) = &trajectory {
        let mut series = Vec::new();
        let mut j = 1;
        while let (Some(re), Some(im)) = (column(header, &format!("re_a_{j}")), column(header, &format!("im_a_{j}"))) {
            if j <= 4 {
                series.push(Series { label: format!("Re a{j}"), points: xy(rows, 0, re), dashed: false });
                series.push(Series { label: format!("Im a{j}"), points: xy(rows, 0, im), dashed: true });
            }
            j += 1;
        }
        charts.push(("amplitudes.svg", line_chart("Emitter amplitudes", "t Γ", "amplitude", &series)));
        let mut series = Vec::new();
        for (col, label) in
            [("fidelity", "fidelity"), ("concurrence", "concurrence"), ("storage_fidelity", "storage fidelity")]
        {
            if let Some(c) = column(header, col) {
                series.push(Series { label: label.into(), points: xy(rows, 0, c), dashed: false });
            }
        }
        if !series.is_empty() {
            charts.push(("fidelity.svg", line_chart("Fidelity and concurrence", "t Γ", "value", &series)));
        }
    }
    if let Some((header, rows)) = &amplitudes {
        let categories: Vec<String> = rows.iter().map(|r| fmt12(r[0])).collect();
        let mut series = Vec::new();
        for (re, im, name) in [
            ("re_target", "im_target", "target"),
            ("re_computed", "im_computed", "computed"),
            ("re_noisy", "im_noisy", "noisy"),
        ] {
            if let (Some(r), Some(i)) = (column(header, re), column(header, im)) {
                series.push((format!("Re {name}"), rows.iter().map(|row| row[r]).collect()));
                series.push((format!("Im {name}"), rows.iter().map(|row| row[i]).collect()));
            }
        }
        charts.push(("amplitude_bars.svg", bar_chart("Amplitudes at t0", "amplitude", &categories, &series)));
    }

    let mut written = Vec::new();
    for (name, svg) in charts {
        let path = dir.join(name);
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

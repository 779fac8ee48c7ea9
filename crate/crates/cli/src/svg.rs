//! Minimal self-contained SVG line and bar charts.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stroke {
    Solid,
    Dashed,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub stroke: Stroke,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            stroke: Stroke::Solid,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.stroke = Stroke::Dashed;
        self
    }

    /// Points `(i, v_i)`.
    pub fn indexed(label: impl Into<String>, values: &[f64]) -> Self {
        Self::new(label, values.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect())
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.to_string() }
    }
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 0.0 { lo.abs() * 0.1 } else { 1.0 };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * w
    }

    fn py(&self, y: f64) -> f64 {
        let h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        HEIGHT - MARGIN_BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * h
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (WIDTH - MARGIN_RIGHT + MARGIN_LEFT) / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str, x_ticks: &[(f64, String)]) {
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    let _ = writeln!(out, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#);
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g class="ticks" fill="black">"#);
    for k in 0..=4 {
        let v = f.y.0 + (f.y.1 - f.y.0) * k as f64 / 4.0;
        let y = f.py(v);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            x0 - 6.0,
            y + 4.0,
            fmt_tick(v)
        );
    }
    for (v, label) in x_ticks {
        let x = f.px(*v);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            y0 + 4.0,
            y0 + 18.0,
            escape(label)
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn numeric_ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    (0..=4)
        .map(|k| {
            let v = lo + (hi - lo) * k as f64 / 4.0;
            (v, fmt_tick(v))
        })
        .collect()
}

fn legend_entry(out: &mut String, i: usize, label: &str, color: &str, dash: Option<&str>) {
    let x = WIDTH - MARGIN_RIGHT + 12.0;
    let y = MARGIN_TOP + 10.0 + 20.0 * i as f64;
    let dash = dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
    let _ = writeln!(
        out,
        r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
        x + 24.0,
        x + 30.0,
        y + 4.0,
        escape(label)
    );
}

/// Line chart with one `<g class="series">` group and legend entry per series.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let f = Frame {
        x: padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0))),
        y: padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1))),
    };
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, x_label, y_label, &numeric_ticks(f.x.0, f.x.1));
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = (s.stroke == Stroke::Dashed).then_some("6 4");
        let _ = writeln!(out, r#"<g class="series" data-label="{}">"#, escape(&s.label));
        let _ = writeln!(out, "<title>{}</title>", escape(&s.label));
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let dash_attr = dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2"{dash_attr} points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(out, "</g>");
        legend_entry(&mut out, i, &s.label, color, dash);
    }
    out.push_str("</svg>\n");
    out
}

/// Bar chart of one labeled series; negative bars extend below zero.
pub fn bar_chart(title: &str, x_label: &str, y_label: &str, series_label: &str, bars: &[(String, f64)]) -> String {
    let (lo, hi) = padded_range(bars.iter().map(|b| b.1).chain([0.0]));
    let f = Frame {
        x: (-0.5, bars.len().max(1) as f64 - 0.5),
        y: (lo, hi),
    };
    let stride = (bars.len() / 16).max(1);
    let ticks: Vec<(f64, String)> = bars
        .iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0)
        .map(|(i, b)| (i as f64, b.0.clone()))
        .collect();
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, x_label, y_label, &ticks);
    let color = PALETTE[0];
    let width = (f.px(1.0) - f.px(0.0)) * 0.8;
    let zero = f.py(0.0);
    let _ = writeln!(out, r#"<g class="series" data-label="{}" fill="{color}">"#, escape(series_label));
    let _ = writeln!(out, "<title>{}</title>", escape(series_label));
    for (i, (_, v)) in bars.iter().enumerate() {
        let top = f.py(v.max(0.0));
        let bottom = f.py(v.min(0.0));
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{top:.2}" width="{width:.2}" height="{:.2}"/>"#,
            f.px(i as f64) - width / 2.0,
            (bottom - top).max(0.0)
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN_LEFT}" y1="{zero:.2}" x2="{}" y2="{zero:.2}" stroke="gray"/>"#,
        WIDTH - MARGIN_RIGHT
    );
    legend_entry(&mut out, 0, series_label, color, None);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_escaped() {
        let svg = line_chart("a<b", "x", "y", &[Series::indexed("p&q", &[1.0, 2.0])]);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains("p&amp;q"));
        assert!(!svg.contains("p&q"));
    }

    #[test]
    fn one_group_per_series() {
        let s = [Series::indexed("a", &[0.0, 1.0]), Series::indexed("b", &[1.0, 0.0]).dashed()];
        let svg = line_chart("t", "x", "y", &s);
        assert_eq!(svg.matches(r#"class="series""#).count(), 2);
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn constant_and_empty_inputs_render() {
        let svg = line_chart("t", "x", "y", &[Series::indexed("c", &[3.0])]);
        assert!(!svg.contains("NaN"));
        let svg = bar_chart("t", "x", "y", "s", &[]);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}

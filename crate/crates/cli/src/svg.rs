//! Minimal SVG plots: polylines and point markers on equal-aspect axes in
//! metres. Coordinates are written with fixed precision so reruns are
//! byte-identical.

use std::fmt::Write;

#[derive(Debug, Clone, Copy)]
pub enum Style {
    Line,
    Dots,
    /// A single larger marker per point.
    Marker,
}

pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub style: Style,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(
        label: impl Into<String>,
        color: &'static str,
        style: Style,
        points: Vec<(f64, f64)>,
    ) -> Self {
        Self {
            label: label.into(),
            color,
            style,
            points,
        }
    }
}

pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 60.0;

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag)
}

impl Figure {
    pub fn render(&self) -> String {
        let pts = self.series.iter().flat_map(|s| s.points.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        let pad = 0.08 * (x1 - x0).max(y1 - y0).max(1e-9);
        let (x0, x1, y0, y1) = (x0 - pad, x1 + pad, y0 - pad, y1 + pad);
        let plot_w = WIDTH - 2.0 * MARGIN;
        let plot_h = HEIGHT - 2.0 * MARGIN;
        let scale = (plot_w / (x1 - x0)).min(plot_h / (y1 - y0));
        // centre the data in the frame
        let ox = MARGIN + 0.5 * (plot_w - scale * (x1 - x0));
        let oy = MARGIN + 0.5 * (plot_h - scale * (y1 - y0));
        let px = |x: f64| ox + (x - x0) * scale;
        // page y grows downward, model z upward
        let py = |y: f64| HEIGHT - oy - (y - y0) * scale;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="24" font-size="16" text-anchor="middle" font-family="sans-serif">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444" stroke-width="1"/>"##,
            px(x0),
            py(y1),
            (x1 - x0) * scale,
            (y1 - y0) * scale
        );

        let step = nice_step((x1 - x0).max(y1 - y0));
        let mut tick = (x0 / step).ceil() * step;
        while tick <= x1 {
            let x = px(tick);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444"/>"##,
                py(y0),
                py(y0) + 5.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle" font-family="sans-serif">{}</text>"#,
                py(y0) + 18.0,
                label(tick, step)
            );
            tick += step;
        }
        let mut tick = (y0 / step).ceil() * step;
        while tick <= y1 {
            let y = py(tick);
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#444"/>"##,
                px(x0) - 5.0,
                px(x0)
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end" font-family="sans-serif">{}</text>"#,
                px(x0) - 8.0,
                y + 4.0,
                label(tick, step)
            );
            tick += step;
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" font-family="sans-serif">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.1}" font-size="12" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 16 {:.1})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );

        for s in &self.series {
            match s.style {
                Style::Line => {
                    let path: Vec<String> = s
                        .points
                        .iter()
                        .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                        .collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                        path.join(" "),
                        s.color
                    );
                }
                Style::Dots | Style::Marker => {
                    let r = if matches!(s.style, Style::Marker) {
                        5.0
                    } else {
                        2.5
                    };
                    for &(x, y) in &s.points {
                        let _ = writeln!(
                            out,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="{r}" fill="{}"/>"#,
                            px(x),
                            py(y),
                            s.color
                        );
                    }
                }
            }
        }

        let mut ly = MARGIN + 14.0;
        for s in &self.series {
            let lx = WIDTH - MARGIN - 170.0;
            let _ = writeln!(
                out,
                r#"<rect x="{lx:.1}" y="{:.1}" width="12" height="12" fill="{}"/>"#,
                ly - 10.0,
                s.color
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{ly:.1}" font-size="12" font-family="sans-serif">{}</text>"#,
                lx + 18.0,
                escape(&s.label)
            );
            ly += 18.0;
        }
        let _ = writeln!(out, "</svg>");
        out
    }
}

fn label(v: f64, step: f64) -> String {
    let digits = (-step.log10().floor()).max(0.0) as usize;
    let v = if v.abs() < 0.5 * step * 1e-6 { 0.0 } else { v };
    format!("{v:.digits$}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

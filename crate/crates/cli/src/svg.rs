//! Minimal deterministic SVG charts: lines and marker clouds on linear or
//! log-y axes.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    /// Palette index; series sharing a color share a legend entry.
    pub color: usize,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn num(v: f64) -> String {
    format!("{v:.2}")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_y: false,
            series: Vec::new(),
        }
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn push(&mut self, name: &str, points: Vec<(f64, f64)>, style: Style, color: usize) {
        self.series.push(Series {
            name: name.into(),
            points,
            style,
            color,
        });
    }

    fn ty(&self, y: f64) -> f64 {
        if self.log_y {
            y.max(1e-300).log10()
        } else {
            y
        }
    }

    pub fn render(&self) -> String {
        let pts = || {
            self.series
                .iter()
                .flat_map(|s| s.points.iter())
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!self.log_y || *y > 0.0))
        };
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in pts() {
            let y = self.ty(y);
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x0 > x1 {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-300 {
            (x0, x1) = (x0 - 0.5, x1 + 0.5);
        }
        if y1 - y0 < 1e-300 {
            let pad = if y0 == 0.0 { 1.0 } else { 0.1 * y0.abs() };
            (y0, y1) = (y0 - pad, y1 + pad);
        }
        if self.log_y {
            (y0, y1) = (y0.floor(), y1.ceil());
        } else {
            let pad = 0.05 * (y1 - y0);
            (y0, y1) = (y0 - pad, y1 + pad);
        }
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            num(LEFT + pw / 2.0),
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            num(pw),
            num(ph)
        );
        for t in nice_ticks(x0, x1) {
            let x = num(sx(t));
            let _ = writeln!(
                out,
                r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black"/><text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
                num(TOP + ph),
                num(TOP + ph + 5.0),
                num(TOP + ph + 18.0),
                tick_label(t)
            );
        }
        let yticks: Vec<f64> = if self.log_y {
            let step = ((y1 - y0) / 8.0).ceil().max(1.0);
            let mut v = Vec::new();
            let mut t = y0;
            while t <= y1 + 1e-9 {
                v.push(t);
                t += step;
            }
            v
        } else {
            nice_ticks(y0, y1)
        };
        for t in yticks {
            let y = num(sy(t));
            let label = if self.log_y {
                format!("1e{}", t as i64)
            } else {
                tick_label(t)
            };
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="black"/><text x="{}" y="{y}" text-anchor="end" dominant-baseline="middle">{label}</text>"#,
                num(LEFT - 5.0),
                num(LEFT - 8.0)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(LEFT + pw / 2.0),
            num(H - 12.0),
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            num(TOP + ph / 2.0),
            num(TOP + ph / 2.0),
            escape(&self.y_label)
        );

        let mut legend: Vec<(usize, &str)> = Vec::new();
        for s in &self.series {
            let color = PALETTE[s.color % PALETTE.len()];
            let visible: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!self.log_y || *y > 0.0))
                .map(|&(x, y)| (sx(x), sy(self.ty(y))))
                .collect();
            match s.style {
                Style::Line => {
                    let path: Vec<String> =
                        visible.iter().map(|&(x, y)| format!("{},{}", num(x), num(y))).collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#,
                        path.join(" ")
                    );
                }
                Style::Markers => {
                    let _ = write!(out, r#"<g fill="{color}" fill-opacity="0.5">"#);
                    for (x, y) in visible {
                        let _ = write!(out, r#"<circle cx="{}" cy="{}" r="1.6"/>"#, num(x), num(y));
                    }
                    let _ = writeln!(out, "</g>");
                }
            }
            if !legend.iter().any(|(c, _)| *c == s.color) {
                legend.push((s.color, &s.name));
            }
        }
        for (i, (c, name)) in legend.iter().enumerate() {
            let y = TOP + 10.0 + 16.0 * i as f64;
            let x = W - RIGHT + 12.0;
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
                num(x),
                num(y - 8.0),
                PALETTE[c % PALETTE.len()],
                num(x + 14.0),
                num(y + 1.0),
                escape(name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

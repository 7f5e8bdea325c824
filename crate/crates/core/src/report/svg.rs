//! Minimal SVG line plots.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, Default)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
    /// Palette index; series sharing it share the colour.
    pub color: usize,
}

#[derive(Debug, Clone)]
pub struct Marker {
    pub x: f64,
    pub y: f64,
    pub label: String,
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub series: Vec<Series>,
    pub markers: Vec<Marker>,
    pub log_y: bool,
    /// Same scale on both axes (contour plots).
    pub equal_aspect: bool,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl Series {
    pub fn new(label: &str, points: Vec<(f64, f64)>, color: usize) -> Self {
        Series { label: label.to_string(), points, dashed: false, color }
    }
}

impl Plot {
    pub fn new(title: &str, xlabel: &str, ylabel: &str) -> Self {
        Plot { title: title.into(), xlabel: xlabel.into(), ylabel: ylabel.into(), ..Default::default() }
    }

    fn ty(&self, y: f64) -> f64 {
        if self.log_y {
            y.log10()
        } else {
            y
        }
    }

    fn usable(&self, (x, y): (f64, f64)) -> bool {
        x.is_finite() && y.is_finite() && (!self.log_y || y > 0.0)
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let pts =
            self.series.iter().flat_map(|s| s.points.iter().copied()).chain(self.markers.iter().map(|m| (m.x, m.y)));
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in pts.filter(|&p| self.usable(p)) {
            let y = self.ty(p.1);
            x0 = x0.min(p.0);
            x1 = x1.max(p.0);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, b + 0.5) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        if self.equal_aspect {
            let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
            let scale = ((x1 - x0) / pw).max((y1 - y0) / ph);
            let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
            return (cx - 0.5 * scale * pw, cx + 0.5 * scale * pw, cy - 0.5 * scale * ph, cy + 0.5 * scale * ph);
        }
        let m = 0.05 * (y1 - y0);
        (x0, x1, y0 - m, y1 + m)
    }

    pub fn to_svg(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
        let py = |y: f64| H - BOTTOM - (self.ty(y) - y0) / (y1 - y0) * (H - TOP - BOTTOM);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            W / 2.0,
            esc(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - LEFT - RIGHT,
            H - TOP - BOTTOM
        );
        for i in 0..=5 {
            let f = i as f64 / 5.0;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let (gx, gy) = (px(xv), H - BOTTOM - f * (H - TOP - BOTTOM));
            let ylab = if self.log_y { tick_label(10f64.powf(yv)) } else { tick_label(yv) };
            let _ = writeln!(s, r##"<line x1="{gx:.2}" y1="{TOP}" x2="{gx:.2}" y2="{}" stroke="#ddd"/>"##, H - BOTTOM);
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{gy:.2}" x2="{}" y2="{gy:.2}" stroke="#ddd"/>"##, W - RIGHT);
            let _ = writeln!(
                s,
                r#"<text x="{gx:.2}" y="{}" text-anchor="middle">{}</text>"#,
                H - BOTTOM + 16.0,
                tick_label(xv)
            );
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, gy + 4.0, ylab);
        }
        let _ =
            writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, esc(&self.xlabel));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            esc(&self.ylabel)
        );
        let mut legend_row = 0;
        let mut seen = Vec::new();
        for sr in &self.series {
            let color = PALETTE[sr.color % PALETTE.len()];
            let pts: Vec<String> = sr
                .points
                .iter()
                .filter(|&&p| self.usable(p))
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            if pts.is_empty() {
                continue;
            }
            let dash = if sr.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                pts.join(" ")
            );
            if !sr.label.is_empty() && !seen.contains(&sr.label) {
                seen.push(sr.label.clone());
                let ly = TOP + 14.0 + 16.0 * legend_row as f64;
                let _ = writeln!(
                    s,
                    r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#,
                    W - RIGHT - 150.0,
                    W - RIGHT - 130.0
                );
                let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, W - RIGHT - 125.0, ly + 4.0, esc(&sr.label));
                legend_row += 1;
            }
        }
        for m in self.markers.iter().filter(|m| self.usable((m.x, m.y))) {
            let (mx, my) = (px(m.x), py(m.y));
            let _ = writeln!(s, r#"<circle cx="{mx:.2}" cy="{my:.2}" r="4" fill="black"/>"#);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, mx + 6.0, my - 6.0, esc(&m.label));
        }
        s.push_str("</svg>\n");
        s
    }
}

//! Deterministic SVG charts: line overlays and the breakdown-time heat map.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

/// Two significant digits; plain notation for moderate magnitudes.
pub fn fmt_tick(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return "0".into();
    }
    let e0 = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(e0 - 1);
    let r = (x / scale).round() * scale;
    let e = r.abs().log10().floor() as i32;
    if (-3..4).contains(&e) {
        let decimals = (1 - e).max(0) as usize;
        format!("{r:.decimals$}")
    } else {
        let m = r / 10f64.powi(e);
        format!("{m:.1}e{e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Data range widened by 5% on each side; degenerate ranges get a unit span.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    if span <= 0.0 {
        let pad = if lo == 0.0 { 0.5 } else { 0.5 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo - 0.05 * span, hi + 0.05 * span)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for i in 0..=5 {
        let xv = f.x.0 + (f.x.1 - f.x.0) * i as f64 / 5.0;
        let px = f.px(xv);
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{y0:.1}" x2="{px:.2}" y2="{:.1}" stroke="black"/><text x="{px:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
            y0 + 5.0,
            y0 + 19.0,
            fmt_tick(xv)
        );
        let yv = f.y.0 + (f.y.1 - f.y.0) * i as f64 / 5.0;
        let py = f.py(yv);
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{py:.2}" x2="{x0:.1}" y2="{py:.2}" stroke="black"/><text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0,
            fmt_tick(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

/// Overlaid line plot; an empty `series` list or empty series give axes only.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let finite = || {
        series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|p| p.0.is_finite() && p.1.is_finite())
    };
    let bounds = |sel: fn(&(f64, f64)) -> f64| {
        finite()
            .map(sel)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    };
    let (xl, xh) = bounds(|p| p.0);
    let (yl, yh) = bounds(|p| p.1);
    let frame = if xl > xh {
        Frame {
            x: (0.0, 1.0),
            y: (0.0, 1.0),
        }
    } else {
        Frame {
            x: padded(xl, xh),
            y: padded(yl, yh),
        }
    };

    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &frame, xlabel, ylabel);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = if s.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let mut path = String::new();
        let mut pen_down = false;
        for &(x, y) in &s.points {
            if !(x.is_finite() && y.is_finite()) {
                pen_down = false;
                continue;
            }
            let _ = write!(
                path,
                "{}{:.2},{:.2} ",
                if pen_down { "L" } else { "M" },
                frame.px(x),
                frame.py(y)
            );
            pen_down = true;
        }
        if !path.is_empty() {
            let _ = writeln!(
                out,
                r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"#,
                path.trim_end()
            );
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="1.6"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// One heat-map cell; `None` marks an infeasible cell, left blank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub x: f64,
    pub y: f64,
    pub value: Option<f64>,
}

fn color(t: f64) -> String {
    // Blue to yellow through a fixed three-stop ramp.
    let stops = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.5, [33.0, 145.0, 140.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let t = t.clamp(0.0, 1.0);
    let (a, b) = if t <= 0.5 {
        (stops[0], stops[1])
    } else {
        (stops[1], stops[2])
    };
    let w = (t - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3)
        .map(|k| (a.1[k] + w * (b.1[k] - a.1[k])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Heat map on a rectilinear grid. Colors follow `log10(1 + value)`.
pub fn heat_map(title: &str, xlabel: &str, ylabel: &str, cells: &[Cell]) -> String {
    let mut xs: Vec<f64> = cells.iter().map(|c| c.x).collect();
    let mut ys: Vec<f64> = cells.iter().map(|c| c.y).collect();
    for v in [&mut xs, &mut ys] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let step = |v: &[f64]| {
        if v.len() > 1 {
            (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64
        } else {
            1.0
        }
    };
    let (dx, dy) = (step(&xs), step(&ys));
    let frame = match (xs.first(), xs.last(), ys.first(), ys.last()) {
        (Some(&x0), Some(&x1), Some(&y0), Some(&y1)) => Frame {
            x: padded(x0 - dx / 2.0, x1 + dx / 2.0),
            y: padded(y0 - dy / 2.0, y1 + dy / 2.0),
        },
        _ => Frame {
            x: (0.0, 1.0),
            y: (0.0, 1.0),
        },
    };
    let scaled = |v: f64| (1.0 + v.max(0.0)).log10();
    let hi = cells
        .iter()
        .filter_map(|c| c.value)
        .filter(|v| v.is_finite())
        .map(scaled)
        .fold(0.0, f64::max);

    let mut out = String::new();
    header(&mut out, title);
    for c in cells {
        let Some(v) = c.value else { continue };
        let t = if v.is_finite() {
            if hi > 0.0 {
                scaled(v) / hi
            } else {
                0.0
            }
        } else {
            1.0
        };
        let (x0, x1) = (frame.px(c.x - dx / 2.0), frame.px(c.x + dx / 2.0));
        let (y0, y1) = (frame.py(c.y + dy / 2.0), frame.py(c.y - dy / 2.0));
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            x1 - x0,
            y1 - y0,
            color(t)
        );
    }
    axes(&mut out, &frame, xlabel, ylabel);
    // Color bar.
    let (bx, by, bh) = (
        WIDTH - RIGHT + 20.0,
        TOP + 10.0,
        HEIGHT - TOP - BOTTOM - 20.0,
    );
    for i in 0..50 {
        let t = 1.0 - i as f64 / 49.0;
        let _ = writeln!(
            out,
            r#"<rect x="{bx:.1}" y="{:.2}" width="18" height="{:.2}" fill="{}"/>"#,
            by + bh * i as f64 / 50.0,
            bh / 50.0 + 0.5,
            color(t)
        );
    }
    for (t, y) in [(1.0, by), (0.5, by + bh / 2.0), (0.0, by + bh)] {
        let value = 10f64.powf(t * hi) - 1.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            bx + 24.0,
            y + 4.0,
            fmt_tick(value)
        );
    }
    out.push_str("</svg>\n");
    out
}

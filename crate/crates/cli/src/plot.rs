//! Bare-bones SVG: one line chart and one categorical heat map.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }
}

fn extent(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn header(svg: &mut String, title: &str) {
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = write!(svg, r#"<text x="{LEFT}" y="18">{}</text>"#, escape(title));
}

fn axes(svg: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (x0, x1) = (LEFT, W - RIGHT);
    let (y0, y1) = (H - BOTTOM, TOP);
    let _ = write!(svg, r#"<path d="M{x0} {y1}V{y0}H{x1}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = f.x.0 + t * (f.x.1 - f.x.0);
        let yv = f.y.0 + t * (f.y.1 - f.y.0);
        let (px, py) = (f.px(xv), f.py(yv));
        let _ = write!(svg, r#"<path d="M{px:.1} {y0}v5M{x0} {py:.1}h-5" stroke="black"/>"#);
        let _ = write!(svg, r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, y0 + 18.0, tick(xv));
        let _ = write!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, tick(yv));
    }
    let _ = write!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 10.0, escape(xlabel));
    let _ = write!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Polyline through the finite points; gaps in the data break the line.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, pts: &[(f64, f64)]) -> String {
    let f = Frame { x: extent(pts.iter().map(|p| p.0)), y: extent(pts.iter().map(|p| p.1)) };
    let mut svg = String::new();
    header(&mut svg, title);
    axes(&mut svg, &f, xlabel, ylabel);
    let mut d = String::new();
    let mut pen_up = true;
    for &(x, y) in pts {
        if !(x.is_finite() && y.is_finite()) {
            pen_up = true;
            continue;
        }
        let _ = write!(d, "{}{:.2} {:.2}", if pen_up { "M" } else { "L" }, f.px(x), f.py(y));
        pen_up = false;
    }
    let _ = write!(svg, r##"<path d="{d}" fill="none" stroke="#1f5fa8" stroke-width="1.5"/>"##);
    svg.push_str("</svg>\n");
    svg
}

/// Grid of labelled cells. `cells` holds (x, y, category index) on a regular
/// grid; `legend` names and colours the categories.
pub fn heat_map(title: &str, xlabel: &str, ylabel: &str, cells: &[(f64, f64, usize)], legend: &[(&str, &str)]) -> String {
    let mut xs: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let mut ys: Vec<f64> = cells.iter().map(|c| c.1).collect();
    for v in [&mut xs, &mut ys] {
        v.sort_by(|a, b| a.total_cmp(b));
        v.dedup();
    }
    let step = |v: &[f64]| if v.len() > 1 { (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64 } else { 1.0 };
    let (dx, dy) = (step(&xs), step(&ys));
    let f = Frame {
        x: (xs.first().copied().unwrap_or(0.0) - 0.5 * dx, xs.last().copied().unwrap_or(1.0) + 0.5 * dx),
        y: (ys.first().copied().unwrap_or(0.0) - 0.5 * dy, ys.last().copied().unwrap_or(1.0) + 0.5 * dy),
    };
    let mut svg = String::new();
    header(&mut svg, title);
    let (w, h) = (f.px(f.x.0 + dx) - f.px(f.x.0), f.py(f.y.0) - f.py(f.y.0 + dy));
    for &(x, y, c) in cells {
        let colour = legend.get(c).map_or("#999999", |l| l.1);
        let _ = write!(
            svg,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{colour}"/>"#,
            f.px(x - 0.5 * dx),
            f.py(y + 0.5 * dy),
            w + 0.05,
            h + 0.05
        );
    }
    axes(&mut svg, &f, xlabel, ylabel);
    for (i, (name, colour)) in legend.iter().enumerate() {
        // top-right, clear of the axis labels
        let x = W - RIGHT - 60.0 * (legend.len() - i) as f64;
        let _ = write!(svg, r#"<rect x="{x}" y="9" width="10" height="10" fill="{colour}"/>"#);
        let _ = write!(svg, r#"<text x="{}" y="18">{name}</text>"#, x + 14.0);
    }
    svg.push_str("</svg>\n");
    svg
}

//! Minimal SVG scatter plot: one circle per sample inside an axes box,
//! colored by class, with a class-index legend in the top margin.

use std::fmt::Write;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 0.05 * SIZE;

/// 20-color categorical palette; class `c` uses `PALETTE[c % 20]`.
pub const PALETTE: [&str; 20] = [
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a", "#d62728", "#ff9896",
    "#9467bd", "#c5b0d5", "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f", "#c7c7c7",
    "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
];

fn axis_map(values: impl Iterator<Item = f64> + Clone, invert: bool) -> impl Fn(f64) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let span = hi - lo;
    move |v| {
        let t = if span > 0.0 { (v - lo) / span } else { 0.5 };
        let t = if invert { 1.0 - t } else { t };
        MARGIN + t * (SIZE - 2.0 * MARGIN)
    }
}

/// Renders `(x, y)` points with canonical class indices and legend labels.
pub fn scatter(points: &[(f64, f64)], classes: &[usize], legend: &[String]) -> String {
    let fx = axis_map(points.iter().map(|p| p.0), false);
    let fy = axis_map(points.iter().map(|p| p.1), true);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SIZE} {SIZE}" width="{SIZE}" height="{SIZE}">"#
    );
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{w}" height="{w}" fill="none" stroke="#444444" stroke-width="1"/>"##,
        w = SIZE - 2.0 * MARGIN
    );
    for (&(x, y), &c) in points.iter().zip(classes) {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" fill-opacity="0.8"/>"#,
            fx(x),
            fy(y),
            PALETTE[c % PALETTE.len()]
        );
    }
    for (c, label) in legend.iter().enumerate() {
        let x = MARGIN + c as f64 * 60.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="14" width="10" height="10" fill="{}"/><text x="{}" y="23" font-size="11" font-family="sans-serif">{}</text>"#,
            PALETTE[c % PALETTE.len()],
            x + 14.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

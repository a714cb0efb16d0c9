//! Norm-growth fan charts as plain SVG polylines.

use std::fmt::Write;

use crate::random_forcing::ChainStats;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

/// Nearest-rank quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((q * (sorted.len() - 1) as f64).round() as usize).min(sorted.len() - 1);
    sorted[idx]
}

/// Per-period quantile bands of `‖u_k‖_s` over the chains still running at
/// period `k`, with the threshold `M` drawn dashed.
pub fn fan_chart(chains: &[ChainStats], threshold: f64, title: &str) -> String {
    let horizon = chains.iter().map(|c| c.norms.len()).max().unwrap_or(1);
    let columns: Vec<Vec<f64>> = (0..horizon)
        .map(|k| {
            let mut col: Vec<f64> = chains
                .iter()
                .filter_map(|c| c.norms.get(k).copied())
                .filter(|v| v.is_finite())
                .collect();
            col.sort_by(f64::total_cmp);
            col
        })
        .collect();
    let top = columns.iter().flatten().copied().fold(threshold, f64::max) * 1.05;
    let top = if top > 0.0 { top } else { 1.0 };
    let span = (horizon.max(2) - 1) as f64;
    let x = |k: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * k as f64 / span;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * v / top;

    let band = |lo: f64, hi: f64| -> String {
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        for (k, col) in columns.iter().enumerate().filter(|(_, c)| !c.is_empty()) {
            upper.push(format!("{:.2},{:.2}", x(k), y(quantile(col, hi))));
            lower.push(format!("{:.2},{:.2}", x(k), y(quantile(col, lo))));
        }
        lower.reverse();
        upper.extend(lower);
        upper.join(" ")
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="24" font-family="sans-serif" font-size="14">{title}</text>"#
    );
    for (lo, hi, opacity) in [(0.0, 1.0, 0.15), (0.1, 0.9, 0.25), (0.25, 0.75, 0.4)] {
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="steelblue" fill-opacity="{opacity}"/>"#,
            band(lo, hi)
        );
    }
    let median: Vec<String> = columns
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_empty())
        .map(|(k, c)| format!("{:.2},{:.2}", x(k), y(quantile(c, 0.5))))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="navy" stroke-width="2"/>"#,
        median.join(" ")
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-dasharray="6,4"/>"#,
        x(0),
        y(threshold),
        x(horizon - 1),
        y(threshold)
    );
    let (x0, y0) = (MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<polyline points="{x0},{MARGIN} {x0},{y0} {},{y0}" fill="none" stroke="black"/>"#,
        WIDTH - MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">period</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="6" y="{}" font-family="sans-serif" font-size="12">{top:.3}</text>"#,
        MARGIN + 4.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="6" y="{y0}" font-family="sans-serif" font-size="12">0</text>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
        x(horizon - 1) - 8.0,
        HEIGHT - MARGIN + 16.0,
        horizon - 1
    );
    svg.push_str("</svg>\n");
    svg
}

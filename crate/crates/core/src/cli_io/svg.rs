//! Self-contained SVG line charts.

use std::fmt::Write as _;

use crate::diagnostics::DiagnosticsRecord;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// One named curve.
#[derive(Clone, Debug)]
pub struct Curve {
    pub label: String,
    pub values: Vec<f64>,
}

impl Curve {
    pub fn new(label: &str, values: Vec<f64>) -> Self {
        Self { label: label.to_string(), values }
    }
}

/// Line chart of `curves` against `x`. On a log axis non-positive values are skipped.
pub fn line_chart(title: &str, x: &[f64], curves: &[Curve], log_y: bool) -> String {
    let transform = |v: f64| if log_y { (v > 0.0).then(|| v.log10()) } else { v.is_finite().then_some(v) };
    let points: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|c| x.iter().zip(&c.values).filter_map(|(&t, &v)| Some((t, transform(v)?))).collect())
        .collect();
    let all = points.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(t, v) in all {
        x0 = x0.min(t);
        x1 = x1.max(t);
        y0 = y0.min(v);
        y1 = y1.max(v);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |t: f64| MARGIN + (t - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let tick = |v: f64| if log_y { format!("1e{v:.1}") } else { format!("{v:.3e}") };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(svg, r#"<text x="{MARGIN}" y="{}" text-anchor="middle">{x0:.2}</text>"#, HEIGHT - MARGIN + 16.0);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{x1:.2}</text>"#,
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 16.0
    );
    let _ =
        writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, MARGIN - 4.0, HEIGHT - MARGIN, tick(y0));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, MARGIN - 4.0, MARGIN + 4.0, tick(y1));
    for (k, (curve, pts)) in curves.iter().zip(&points).enumerate() {
        let color = COLORS[k % COLORS.len()];
        if !pts.is_empty() {
            let path: Vec<String> = pts.iter().map(|&(t, v)| format!("{:.2},{:.2}", px(t), py(v))).collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
        }
        let ly = MARGIN + 16.0 + 16.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 150.0,
            escape(&curve.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// The standard chart set of a run: file name and SVG text.
pub fn run_charts(records: &[DiagnosticsRecord]) -> Vec<(&'static str, String)> {
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    let col = |f: fn(&DiagnosticsRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    vec![
        (
            "energy.svg",
            line_chart(
                "energy and dissipation",
                &t,
                &[Curve::new("E", col(|r| r.energy)), Curve::new("D", col(|r| r.dissipation))],
                false,
            ),
        ),
        (
            "modulated_energy.svg",
            line_chart(
                "modulated energy (log scale)",
                &t,
                &[Curve::new("modulated energy", col(|r| r.modulated_energy))],
                true,
            ),
        ),
        (
            "drifts.svg",
            line_chart(
                "conservation drifts (log scale)",
                &t,
                &[
                    Curve::new("|momentum drift|", col(|r| r.momentum_drift.abs())),
                    Curve::new("|energy residual|", col(|r| r.energy_residual.abs())),
                    Curve::new("|mass - mass(0)|", {
                        let m0 = records.first().map_or(0.0, |r| r.mass);
                        records.iter().map(|r| (r.mass - m0).abs()).collect()
                    }),
                ],
                true,
            ),
        ),
    ]
}

//! Score-curve export: CSV and a minimal static SVG line chart, emitted as
//! direct markup with no charting dependency.

use crate::series::ScoreSeries;
use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 300.0;
const MARGIN: f64 = 40.0;

/// `t,predicted,ground_truth` rows. Predictions are min-max normalized for
/// plotting; the ground truth is written as-is (already in [0, 1]).
pub fn render_curve_csv(predicted: &ScoreSeries, target: &[f64]) -> String {
    let normalized = predicted.normalized();
    let mut s = String::from("t,predicted,ground_truth\n");
    for (t, (p, g)) in normalized.values().iter().zip(target).enumerate() {
        let _ = writeln!(s, "{t},{p},{g}");
    }
    s
}

/// Two-polyline chart: ground truth in blue, normalized prediction in
/// orange.
pub fn render_curve_svg(title: &str, predicted: &ScoreSeries, target: &[f64]) -> String {
    let normalized = predicted.normalized();
    let n = normalized.len().max(2);
    let x = |t: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * t as f64 / (n - 1) as f64;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * v.clamp(0.0, 1.0);

    let points = |values: &[f64]| -> String {
        values
            .iter()
            .enumerate()
            .map(|(t, &v)| format!("{:.2},{:.2}", x(t), y(v)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"##
    );
    let _ = writeln!(s, r##"  <rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"##);
    let _ = writeln!(
        s,
        r##"  <text x="{MARGIN}" y="24" font-family="sans-serif" font-size="14">{}</text>"##,
        escape(title)
    );
    // axes
    let _ = writeln!(
        s,
        r##"  <line x1="{MARGIN}" y1="{0}" x2="{1}" y2="{0}" stroke="#444" stroke-width="1"/>"##,
        HEIGHT - MARGIN,
        WIDTH - MARGIN
    );
    let _ = writeln!(
        s,
        r##"  <line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{}" stroke="#444" stroke-width="1"/>"##,
        HEIGHT - MARGIN
    );
    let _ = writeln!(
        s,
        r##"  <polyline fill="none" stroke="#4878a8" stroke-width="1.5" points="{}"/>"##,
        points(target)
    );
    let _ = writeln!(
        s,
        r##"  <polyline fill="none" stroke="#e08030" stroke-width="1.5" points="{}"/>"##,
        points(normalized.values())
    );
    // legend
    let _ = writeln!(
        s,
        r##"  <text x="{}" y="24" font-family="sans-serif" font-size="12" fill="#4878a8">ground truth</text>"##,
        WIDTH - 220.0
    );
    let _ = writeln!(
        s,
        r##"  <text x="{}" y="24" font-family="sans-serif" font-size="12" fill="#e08030">predicted</text>"##,
        WIDTH - 110.0
    );
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

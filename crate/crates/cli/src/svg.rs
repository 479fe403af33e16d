//! Minimal SVG line charts with a fixed 960×600 view box.

use std::fmt::Write;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#000000", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
];

/// One named curve. Points with a missing `y` break the line.
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, Option<f64>)>,
}

/// Tick positions covering `[lo, hi]` with a 1-2-5 step.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step - 1e-9).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

/// Renders `series` against a shared x axis. The y range is clipped to
/// 2.5 times the largest value of the first series, so diverging bounds do
/// not flatten the rest of the chart.
pub fn line_chart(title: &str, x_label: &str, series: &[Series]) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (mut x_lo, mut x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let ys = || {
        series
            .iter()
            .flat_map(|s| s.points.iter().filter_map(|p| p.1))
            .filter(|y| y.is_finite())
    };
    let mut y_lo = ys().fold(f64::INFINITY, f64::min).min(0.0);
    let mut y_hi = ys().fold(f64::NEG_INFINITY, f64::max);
    if let Some(first_max) = series
        .first()
        .map(|s| s.points.iter().filter_map(|p| p.1).fold(f64::NEG_INFINITY, f64::max))
        .filter(|m| m.is_finite() && *m > 0.0)
    {
        y_hi = y_hi.min(2.5 * first_max);
    }
    if !(x_lo.is_finite() && x_hi > x_lo) {
        x_lo = if x_lo.is_finite() { x_lo - 0.5 } else { 0.0 };
        x_hi = x_lo + 1.0;
    }
    if !(y_lo.is_finite() && y_hi > y_lo) {
        y_lo = 0.0;
        y_hi = 1.0;
    }

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="13">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}"/></clipPath></defs>"#
    );
    let _ = writeln!(s, r#"<text x="{}" y="28" text-anchor="middle" font-size="16">{}</text>"#, LEFT + plot_w / 2.0, escape(title));

    for t in ticks(x_lo, x_hi) {
        let x = px(t);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##, TOP + plot_h);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + plot_h + 20.0, tick_label(t));
    }
    for t in ticks(y_lo, y_hi) {
        let y = py(t);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##, LEFT + plot_w);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, tick_label(t));
    }
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#000000"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );

    for (i, ser) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let width = if i == 0 { 2.5 } else { 1.5 };
        for run in ser.points.split(|p| !p.1.is_some_and(f64::is_finite)) {
            if run.is_empty() {
                continue;
            }
            let pts: Vec<String> = run
                .iter()
                .filter_map(|&(x, y)| y.map(|y| format!("{:.2},{:.2}", px(x), py(y))))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline clip-path="url(#plot)" fill="none" stroke="{colour}" stroke-width="{width}" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let ly = TOP + 10.0 + 22.0 * i as f64;
        let lx = LEFT + plot_w + 16.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="{width}"/>"#,
            lx + 24.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 32.0, ly + 4.0, escape(&ser.name));
    }
    s.push_str("</svg>\n");
    s
}

fn tick_label(t: f64) -> String {
    let v = if t.abs() < 1e-12 { 0.0 } else { t };
    let text = format!("{v:.4}");
    text.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

//! Minimal SVG line plot of the lifted eigenvalue curves.

use std::fmt::Write;

use specflow::lifting::TrackedPath;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 48.0;

pub fn track_plot(path: &TrackedPath) -> String {
    let lifted = path.lifted_windows();
    let t0 = path.samples[0];
    let t1 = *path.samples.last().unwrap();
    let (mut lo, mut hi) = lifted
        .iter()
        .flat_map(|w| w.values().iter().copied())
        .fold((0.0f64, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let tspan = if t1 > t0 { t1 - t0 } else { 1.0 };
    let x = |t: f64| MARGIN + (t - t0) / tspan * (WIDTH - 2.0 * MARGIN);
    let y = |v: f64| HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 4"/>"#,
        x(t0),
        y(0.0),
        x(t1),
        y(0.0)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );

    let j_lo = lifted.iter().map(|w| w.index_lo()).min().unwrap_or(0);
    let j_hi = lifted.iter().map(|w| w.index_hi()).max().unwrap_or(-1);
    for j in j_lo..=j_hi {
        let points: Vec<String> = path
            .samples
            .iter()
            .zip(&lifted)
            .filter_map(|(&t, w)| w.get(j).map(|v| format!("{:.2},{:.2}", x(t), y(v))))
            .collect();
        if points.is_empty() {
            continue;
        }
        let hue = (j.rem_euclid(12) * 30) as u32;
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="hsl({hue},70%,40%)" stroke-width="1.5" points="{}"><title>j = {j}</title></polyline>"#,
            points.join(" ")
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="{:.2}" font-family="sans-serif" font-size="12">t = {t0} .. {t1}, lambda = {lo:.3} .. {hi:.3}, flow = {}</text>"#,
        HEIGHT - 16.0,
        path.cumulative_shift()
    );
    out.push_str("</svg>\n");
    out
}

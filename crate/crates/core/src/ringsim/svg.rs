use std::fmt::Write as _;

use super::TrajectorySample;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 50.0;
const SPEED_BANDS: usize = 8;

fn band_colour(band: usize) -> String {
    // Red when slow, green when fast.
    let f = band as f64 / (SPEED_BANDS - 1) as f64;
    let r = (220.0 * (1.0 - f)) as u8;
    let g = (40.0 + 160.0 * f) as u8;
    format!("#{r:02x}{g:02x}40")
}

/// Space–time diagram: time on x, wrapped ring position on y, each vehicle a
/// polyline coloured by speed band and broken where it wraps.
pub fn space_time_svg(
    samples: &[TrajectorySample],
    length: f64,
    horizon: f64,
    title: &str,
) -> String {
    let v_max = samples.iter().map(|s| s.v).fold(0.0f64, f64::max).max(1e-9);
    let sx = |t: f64| MARGIN + (WIDTH - 2.0 * MARGIN) * t / horizon.max(1e-9);
    let sy = |x: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * x / length;
    let band = |v: f64| ((v / v_max) * (SPEED_BANDS - 1) as f64).round() as usize;

    let mut by_vehicle: Vec<Vec<&TrajectorySample>> = Vec::new();
    for s in samples {
        if by_vehicle.len() <= s.vehicle {
            by_vehicle.resize_with(s.vehicle + 1, Vec::new);
        }
        by_vehicle[s.vehicle].push(s);
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="25" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (sx(0.0), sx(horizon), sy(0.0), sy(length));
    let _ = writeln!(
        out,
        r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" stroke="black" fill="none"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">time (s)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text x="15" y="{}" font-family="sans-serif" font-size="12" transform="rotate(-90 15 {})" text-anchor="middle">position (m)</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for track in &by_vehicle {
        let mut run: Vec<(f64, f64)> = Vec::new();
        let mut run_band = usize::MAX;
        let flush = |run: &mut Vec<(f64, f64)>, b: usize, out: &mut String| {
            if run.len() >= 2 {
                let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" stroke="{}" stroke-width="0.6" fill="none"/>"#,
                    pts.join(" "),
                    band_colour(b)
                );
            }
            run.clear();
        };
        for w in track.windows(2) {
            let (a, b) = (w[0], w[1]);
            let wrapped = b.x < a.x;
            let seg_band = band(0.5 * (a.v + b.v));
            if wrapped || seg_band != run_band {
                flush(&mut run, run_band, &mut out);
                run_band = seg_band;
            }
            if wrapped {
                continue;
            }
            if run.is_empty() {
                run.push((sx(a.t), sy(a.x)));
            }
            run.push((sx(b.t), sy(b.x)));
        }
        flush(&mut run, run_band, &mut out);
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

//! Static SVG rendering of ROC curves.

use std::fmt::Write;

use cmimo::experiment::RocCurve;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn x_px(pfa: f64) -> f64 {
    LEFT + pfa * (WIDTH - LEFT - RIGHT)
}

fn y_px(pd: f64) -> f64 {
    HEIGHT - BOTTOM - pd * (HEIGHT - TOP - BOTTOM)
}

/// P_d against P_fa (per-K normalization) for every curve at one SNR.
/// The horizontal axis is clipped to [0, 1].
pub fn roc_svg(snr_db: f64, curves: &[&RocCurve]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">ROC at SNR {snr_db} dB</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let (x, y) = (x_px(v), y_px(v));
        let _ = writeln!(
            s,
            r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#ddd"/><line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/>"##,
            y_px(0.0),
            y_px(1.0),
            x_px(0.0),
            x_px(1.0)
        );
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{v:.1}</text>"#, y_px(0.0) + 18.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v:.1}</text>"#, x_px(0.0) - 8.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x_px(0.0),
        y_px(1.0),
        x_px(1.0) - x_px(0.0),
        y_px(0.0) - y_px(1.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">P_fa (false alarms / K)</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">P_d</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        (TOP + HEIGHT - BOTTOM) / 2.0
    );

    for (i, curve) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut points = vec![(0.0, 0.0)];
        points.extend(
            curve
                .pfa
                .iter()
                .zip(&curve.pd)
                .filter(|(fa, _)| **fa <= 1.0)
                .map(|(&fa, &d)| (fa, d)),
        );
        let coords: Vec<String> = points
            .iter()
            .map(|&(fa, d)| format!("{:.2},{:.2}", x_px(fa), y_px(d)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = TOP + 20.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 20.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">K = {}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            curve.k
        );
    }
    s.push_str("</svg>\n");
    s
}

//! Plain SVG plot of gap and agreement against ε.

use std::fmt::Write;

use super::ScanResult;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 48.0;

fn sx(x: f64, lo: f64, hi: f64) -> f64 {
    let span = if hi > lo { hi - lo } else { 1.0 };
    PAD + (x - lo) / span * (W - 2.0 * PAD)
}

fn sy(y: f64) -> f64 {
    H - PAD - y.clamp(0.0, 1.0) * (H - 2.0 * PAD)
}

fn polyline(out: &mut String, pts: &[(f64, f64)], colour: &str) {
    if pts.is_empty() {
        return;
    }
    let p: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
        p.join(" ")
    );
}

fn hline(out: &mut String, y: f64, colour: &str, label: &str) {
    let _ = writeln!(
        out,
        r#"<line x1="{PAD}" x2="{}" y1="{y:.2}" y2="{y:.2}" stroke="{colour}" stroke-dasharray="4 4"/><text x="{}" y="{:.2}" font-size="10">{label}</text>"#,
        W - PAD,
        W - PAD + 2.0,
        y + 3.0
    );
}

/// Renders the scan; `thresholds` become vertical rules (e.g. mean-field thresholds).
pub fn render_svg(result: &ScanResult, thresholds: &[f64]) -> String {
    let rows = &result.rows;
    let lo = rows.iter().map(|r| r.eps).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.eps).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<line x1="{PAD}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{0}" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12">eps</text><text x="{PAD}" y="{}" font-size="10">{lo:.3}</text><text x="{}" y="{}" font-size="10">{hi:.3}</text>"#,
        W / 2.0,
        H - 8.0,
        H - PAD + 14.0,
        W - PAD - 20.0,
        H - PAD + 14.0
    );
    for &t in thresholds {
        if t >= lo && t <= hi {
            let x = sx(t, lo, hi);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" x2="{x:.2}" y1="{PAD}" y2="{}" stroke="grey"/>"#,
                H - PAD
            );
        }
    }
    hline(&mut out, sy(result.config.gap_threshold), "#c33", "g*");
    hline(&mut out, sy(1.0 - result.config.delta), "#36c", "1-δ");
    let gap: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.gap.map(|g| (sx(r.eps, lo, hi), sy(g.value))))
        .collect();
    let agree: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.agree.map(|a| (sx(r.eps, lo, hi), sy(a.value))))
        .collect();
    polyline(&mut out, &gap, "#c33");
    polyline(&mut out, &agree, "#36c");
    let _ = writeln!(
        out,
        r##"<text x="{PAD}" y="20" font-size="12" fill="#c33">gap</text><text x="{}" y="20" font-size="12" fill="#36c">agreement</text>"##,
        PAD + 40.0
    );
    out.push_str("</svg>\n");
    out
}

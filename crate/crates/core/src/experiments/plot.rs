//! Minimal SVG charts for experiment results.

use std::fmt::Write;

use super::{DegradationCurve, SweepResult};

const W: f64 = 420.0;
const H: f64 = 360.0;
const PAD: f64 = 50.0;

fn open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        W / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(svg: &mut String, x_label: &str, y_label: &str, x_range: (f64, f64), y_range: (f64, f64)) {
    let (x0, y0, x1, y1) = (PAD, H - PAD, W - PAD / 2.0, PAD);
    let _ = writeln!(
        svg,
        "<path d=\"M{x0} {y1} L{x0} {y0} L{x1} {y0}\" stroke=\"black\" fill=\"none\"/>"
    );
    for (v, anchor_x) in [(x_range.0, x0), (x_range.1, x1)] {
        let _ = writeln!(
            svg,
            "<text x=\"{anchor_x}\" y=\"{}\" text-anchor=\"middle\">{v:.3}</text>",
            y0 + 15.0
        );
    }
    for (v, anchor_y) in [(y_range.0, y0), (y_range.1, y1)] {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{anchor_y}\" text-anchor=\"end\">{v:.3}</text>",
            x0 - 4.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn scale(v: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    if hi > lo {
        a + (v - lo) / (hi - lo) * (b - a)
    } else {
        (a + b) / 2.0
    }
}

fn two_d(result: &SweepResult) -> Option<(Vec<f64>, Vec<f64>)> {
    (result.grid_spec.0.len() == 2).then(|| (result.grid_spec.0[0].values(), result.grid_spec.0[1].values()))
}

/// Equivalent grid points (filled) over all grid points (hollow); `w*` is
/// marked with a cross. Only two-dimensional sweeps are drawn.
pub fn sweep_scatter(result: &SweepResult, names: &[String]) -> Option<String> {
    let (xs, ys) = two_d(result)?;
    let (xr, yr) = ((xs[0], *xs.last()?), (ys[0], *ys.last()?));
    let mut svg = open(&format!("Weights with deviation <= {}", result.tau));
    axes(&mut svg, &format!("w ({})", names.first()?), &format!("w ({})", names.get(1)?), xr, yr);
    for (k, w) in result.grid.iter().enumerate() {
        let cx = scale(w[0], xr.0, xr.1, PAD, W - PAD / 2.0);
        let cy = scale(w[1], yr.0, yr.1, H - PAD, PAD);
        let fill = if result.equivalent_set.contains(&k) { "steelblue" } else { "none" };
        let _ = writeln!(
            svg,
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"2.5\" fill=\"{fill}\" stroke=\"#999\" stroke-width=\"0.5\"/>"
        );
    }
    let ws = result.w_star.as_slice();
    let cx = scale(ws[0], xr.0, xr.1, PAD, W - PAD / 2.0);
    let cy = scale(ws[1], yr.0, yr.1, H - PAD, PAD);
    let _ = writeln!(
        svg,
        "<path d=\"M{:.2} {:.2} L{:.2} {:.2} M{:.2} {:.2} L{:.2} {:.2}\" stroke=\"crimson\" stroke-width=\"2\"/>",
        cx - 5.0, cy - 5.0, cx + 5.0, cy + 5.0, cx - 5.0, cy + 5.0, cx + 5.0, cy - 5.0
    );
    svg.push_str("</svg>\n");
    Some(svg)
}

/// Deviation per grid cell, white (0) to dark red (max).
pub fn sweep_heatmap(result: &SweepResult, names: &[String]) -> Option<String> {
    let (xs, ys) = two_d(result)?;
    let (xr, yr) = ((xs[0], *xs.last()?), (ys[0], *ys.last()?));
    let max = result
        .deviation
        .iter()
        .flatten()
        .copied()
        .fold(0.0, f64::max);
    let mut svg = open(&format!("Deviation of decisions (max {max:.3})"));
    axes(&mut svg, &format!("w ({})", names.first()?), &format!("w ({})", names.get(1)?), xr, yr);
    let cw = (W - 1.5 * PAD) / xs.len() as f64;
    let ch = (H - 2.0 * PAD) / ys.len() as f64;
    for (k, dev) in result.deviation.iter().enumerate() {
        let idx = result.grid_spec.unravel(k);
        let x = PAD + idx[0] as f64 * cw;
        let y = H - PAD - (idx[1] + 1) as f64 * ch;
        let fill = match dev {
            Some(d) => {
                let t = if max > 0.0 { d / max } else { 0.0 };
                let g = (255.0 * (1.0 - t)).round() as u8;
                format!("rgb(255,{g},{g})")
            }
            None => "#444".into(),
        };
        let _ = writeln!(
            svg,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cw:.2}\" height=\"{ch:.2}\" fill=\"{fill}\"/>"
        );
    }
    svg.push_str("</svg>\n");
    Some(svg)
}

/// Normalized mean change of `ρ` for one attribute with a ±1 std band.
pub fn degradation_lines(curve: &DegradationCurve, attr: usize) -> String {
    let ks = &curve.ks;
    let mean = &curve.normalized_mean[attr];
    let std = &curve.normalized_std[attr];
    let kmax = *ks.last().unwrap_or(&0) as f64;
    let lo = mean.iter().zip(std).map(|(m, s)| m - s).fold(0.0, f64::min);
    let hi = mean.iter().zip(std).map(|(m, s)| m + s).fold(1.0, f64::max);
    let mut svg = open(&format!("Change of rho ({})", curve.attributes[attr]));
    axes(&mut svg, "corrections k", "normalized change", (0.0, kmax), (lo, hi));
    let px = |k: usize| scale(k as f64, 0.0, kmax, PAD, W - PAD / 2.0);
    let py = |v: f64| scale(v, lo, hi, H - PAD, PAD);
    let mut band = String::new();
    for (j, &k) in ks.iter().enumerate() {
        let _ = write!(band, "{}{:.2} {:.2} ", if j == 0 { "M" } else { "L" }, px(k), py(mean[j] + std[j]));
    }
    for (j, &k) in ks.iter().enumerate().rev() {
        let _ = write!(band, "L{:.2} {:.2} ", px(k), py(mean[j] - std[j]));
    }
    let _ = writeln!(svg, "<path d=\"{}Z\" fill=\"steelblue\" fill-opacity=\"0.25\" stroke=\"none\"/>", band);
    let mut line = String::new();
    for (j, &k) in ks.iter().enumerate() {
        let _ = write!(line, "{}{:.2} {:.2} ", if j == 0 { "M" } else { "L" }, px(k), py(mean[j]));
    }
    let _ = writeln!(svg, "<path d=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\"/>", line.trim_end());
    svg.push_str("</svg>\n");
    svg
}

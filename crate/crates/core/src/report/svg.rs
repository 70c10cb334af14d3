//! Hand-written SVG. Coordinates are rounded to two decimals so reruns are
//! byte-identical.

use std::fmt::Write;

use rand::Rng;

use crate::rng::{rng_for, stream};
use crate::shap::{BeeswarmPoint, Direction, TrendSummary};

pub const DIRECT_COLOR: &str = "#d62728";
pub const INVERSE_COLOR: &str = "#1f77b4";
pub const NONE_COLOR: &str = "#9e9e9e";

pub fn direction_color(d: Direction) -> &'static str {
    match d {
        Direction::Direct => DIRECT_COLOR,
        Direction::Inverse => INVERSE_COLOR,
        Direction::None => NONE_COLOR,
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(width: f64, height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// Blue for low feature values through to red for high ones.
fn value_color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(31.0, 214.0), lerp(119.0, 39.0), lerp(180.0, 40.0))
}

/// Beeswarm of one model: one row per feature in the order the points
/// arrive (importance order), phi on the x axis, coloured by feature value.
/// Vertical jitter is drawn from the seed.
pub fn beeswarm_svg(title: &str, points: &[BeeswarmPoint], seed: u64, slot: u64) -> String {
    let mut features: Vec<&str> = Vec::new();
    for p in points {
        if !features.contains(&p.feature.as_str()) {
            features.push(&p.feature);
        }
    }
    let (left, right, top, row_h) = (170.0, 30.0, 40.0, 28.0);
    let plot_w = 480.0;
    let width = left + plot_w + right;
    let height = top + row_h * features.len() as f64 + 60.0;
    let span = points.iter().map(|p| p.phi.abs()).fold(0.0, f64::max).max(1e-12);
    let x_of = |phi: f64| left + plot_w * (0.5 + 0.5 * phi / span);

    let mut s = open(width, height);
    let _ = writeln!(s, "<text x=\"{:.2}\" y=\"22\" font-size=\"14\">{}</text>", width / 2.0 - 120.0, escape(title));
    let zero = x_of(0.0);
    let _ = writeln!(
        s,
        "<line x1=\"{zero:.2}\" y1=\"{top:.2}\" x2=\"{zero:.2}\" y2=\"{:.2}\" stroke=\"#555\"/>",
        top + row_h * features.len() as f64
    );
    let mut rng = rng_for(seed, &[stream::JITTER, slot]);
    for (row, f) in features.iter().enumerate() {
        let cy = top + row_h * (row as f64 + 0.5);
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            left - 8.0,
            cy + 4.0,
            escape(f)
        );
        for p in points.iter().filter(|p| p.feature == *f) {
            let jitter = (rng.random::<f64>() - 0.5) * row_h * 0.7;
            let _ = writeln!(
                s,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{}\" fill-opacity=\"0.8\"/>",
                x_of(p.phi),
                cy + jitter,
                value_color(p.color)
            );
        }
    }
    let axis_y = top + row_h * features.len() as f64 + 20.0;
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{axis_y:.2}\" text-anchor=\"middle\">SHAP value (impact on P(good quality)), range ±{span:.3}</text>",
        left + plot_w / 2.0
    );
    let _ = writeln!(
        s,
        "<text x=\"{left:.2}\" y=\"{:.2}\" fill=\"{}\">low feature value</text>\
         <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"{}\">high feature value</text>",
        axis_y + 22.0,
        value_color(0.0),
        left + plot_w,
        axis_y + 22.0,
        value_color(1.0)
    );
    s.push_str("</svg>\n");
    s
}

/// Horizontal bars of the summed impact weight of the top features.
pub fn top_features_svg(title: &str, top: &[(String, f64)]) -> String {
    let (left, top_m, row_h, plot_w) = (170.0, 40.0, 30.0, 420.0);
    let width = left + plot_w + 80.0;
    let height = top_m + row_h * top.len().max(1) as f64 + 20.0;
    let max = top.iter().map(|t| t.1).fold(0.0, f64::max).max(1e-12);
    let mut s = open(width, height);
    let _ = writeln!(s, "<text x=\"{left:.2}\" y=\"22\" font-size=\"14\">{}</text>", escape(title));
    for (i, (f, w)) in top.iter().enumerate() {
        let y = top_m + row_h * i as f64;
        let len = plot_w * w / max;
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\
             <rect class=\"bar\" data-feature=\"{}\" x=\"{left:.2}\" y=\"{:.2}\" width=\"{len:.2}\" height=\"{:.2}\" fill=\"#4c72b0\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\">{w:.2}</text>",
            left - 8.0,
            y + row_h * 0.6,
            escape(f),
            escape(f),
            y + 4.0,
            row_h - 8.0,
            left + len + 6.0,
            y + row_h * 0.6
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Models by features. Bubble area follows impact weight and colour the
/// reported direction: red direct, blue inverse, gray none. Features no
/// model kept get no column; cells with zero weight get no bubble.
pub fn bubble_svg(title: &str, summary: &TrendSummary) -> String {
    let features: Vec<&String> = summary
        .features
        .iter()
        .filter(|f| summary.cells.iter().any(|c| &c.feature == *f))
        .collect();
    let (left, top, cell) = (70.0, 150.0, 44.0);
    let width = left + cell * features.len().max(1) as f64 + 30.0;
    let height = top + cell * summary.models.len().max(1) as f64 + 70.0;
    let max = summary.cells.iter().map(|c| c.impact_weight).fold(0.0, f64::max).max(1e-12);
    let max_r = cell * 0.45;

    let mut s = open(width, height);
    let _ = writeln!(s, "<text x=\"10\" y=\"22\" font-size=\"14\">{}</text>", escape(title));
    for (j, f) in features.iter().enumerate() {
        let x = left + cell * (j as f64 + 0.5);
        let _ = writeln!(
            s,
            "<text class=\"feature-label\" x=\"{x:.2}\" y=\"{:.2}\" transform=\"rotate(-60 {x:.2} {:.2})\">{}</text>",
            top - 10.0,
            top - 10.0,
            escape(f)
        );
    }
    for (i, m) in summary.models.iter().enumerate() {
        let y = top + cell * (i as f64 + 0.5);
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            left - 8.0,
            y + 4.0,
            escape(m)
        );
        for (j, f) in features.iter().enumerate() {
            let Some(c) = summary.cell(m, f) else { continue };
            if c.impact_weight <= 0.0 {
                continue;
            }
            let r = max_r * (c.impact_weight / max).sqrt();
            let _ = writeln!(
                s,
                "<circle class=\"bubble\" data-model=\"{}\" data-feature=\"{}\" data-direction=\"{}\" \
                 cx=\"{:.2}\" cy=\"{y:.2}\" r=\"{r:.2}\" fill=\"{}\" fill-opacity=\"0.85\"/>",
                escape(m),
                escape(f),
                c.direction.as_str(),
                left + cell * (j as f64 + 0.5),
                direction_color(c.direction)
            );
        }
    }
    let ly = top + cell * summary.models.len() as f64 + 30.0;
    for (k, d) in [Direction::Direct, Direction::Inverse, Direction::None].into_iter().enumerate() {
        let x = left + 110.0 * k as f64;
        let _ = writeln!(
            s,
            "<circle cx=\"{x:.2}\" cy=\"{ly:.2}\" r=\"6\" fill=\"{}\"/><text x=\"{:.2}\" y=\"{:.2}\">{}</text>",
            direction_color(d),
            x + 10.0,
            ly + 4.0,
            d.as_str()
        );
    }
    s.push_str("</svg>\n");
    s
}

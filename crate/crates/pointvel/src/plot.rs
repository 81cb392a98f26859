//! Per-object speed curves as CSV and SVG.

use std::fmt::Write as _;

use pointvel_core::metrics::{SpeedComponents, SpeedSample};

pub const CSV_HEADER: &str = "track,frame,time,est_speed,est_radial,est_tangential,gt_speed,gt_radial,gt_tangential";

/// One row per track-frame; missing estimates or ground truth leave their
/// three cells empty.
pub fn speeds_csv(samples: &[SpeedSample], frame_interval: f64) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let cells = |c: &Option<SpeedComponents>| match c {
        Some(c) => format!("{},{},{}", c.speed, c.radial, c.tangential),
        None => ",,".to_string(),
    };
    for s in samples {
        let time = s.frame_index as f64 * frame_interval;
        let _ = writeln!(out, "{},{},{},{},{}", s.track, s.frame_index, time, cells(&s.estimate), cells(&s.truth));
    }
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const PANEL_W: f64 = 300.0;
const PANEL_H: f64 = 220.0;
const MARGIN: f64 = 45.0;

/// Three panels (speed, radial, tangential) against time. Solid lines are
/// estimates, dashed lines ground truth, one colour per track.
pub fn speeds_svg(samples: &[SpeedSample], frame_interval: f64) -> String {
    type Component = fn(&SpeedComponents) -> f64;
    let panels: [(&str, Component); 3] =
        [("speed", |c| c.speed), ("radial", |c| c.radial), ("tangential", |c| c.tangential)];
    let times: Vec<f64> = samples.iter().map(|s| s.frame_index as f64 * frame_interval).collect();
    let t_max = times.iter().copied().fold(0.0, f64::max).max(frame_interval);
    let v_max = samples
        .iter()
        .flat_map(|s| [s.estimate, s.truth])
        .flatten()
        .map(|c| c.speed)
        .fold(0.0, f64::max)
        .max(0.1)
        * 1.1;
    let mut tracks: Vec<usize> = samples.iter().map(|s| s.track).collect();
    tracks.sort_unstable();
    tracks.dedup();

    let width = 3.0 * (PANEL_W + MARGIN) + MARGIN;
    let height = PANEL_H + 2.0 * MARGIN;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    for (p, (title, component)) in panels.iter().enumerate() {
        let x0 = MARGIN + p as f64 * (PANEL_W + MARGIN);
        let y0 = MARGIN;
        let px = |t: f64| x0 + t / t_max * PANEL_W;
        let py = |v: f64| y0 + PANEL_H - v / v_max * PANEL_H;
        let _ = writeln!(svg, r#"<g class="panel" id="{title}">"#);
        let _ = writeln!(svg, r#"<rect x="{x0}" y="{y0}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="black"/>"#);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{title} (m/s)</text>"#, x0 + PANEL_W / 2.0, y0 - 8.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">time (s)</text>"#, x0 + PANEL_W / 2.0, y0 + PANEL_H + 30.0);
        for k in 0..=4 {
            let v = v_max * k as f64 / 4.0;
            let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{v:.2}</text>"#, x0 - 4.0, py(v) + 4.0);
            let t = t_max * k as f64 / 4.0;
            let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{t:.2}</text>"#, px(t), y0 + PANEL_H + 14.0);
        }
        for (i, track) in tracks.iter().enumerate() {
            let colour = PALETTE[i % PALETTE.len()];
            for (is_truth, dash) in [(false, ""), (true, r#" stroke-dasharray="5,3""#)] {
                // Break the polyline wherever a frame has no value.
                let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
                for (s, t) in samples.iter().zip(&times).filter(|(s, _)| s.track == *track) {
                    let value = if is_truth { s.truth } else { s.estimate };
                    match value {
                        Some(c) => runs.last_mut().unwrap().push((px(*t), py(component(&c)))),
                        None if !runs.last().unwrap().is_empty() => runs.push(Vec::new()),
                        None => {}
                    }
                }
                for run in runs.iter().filter(|r| !r.is_empty()) {
                    let points: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let _ = writeln!(
                        svg,
                        r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5"{dash} points="{}"/>"#,
                        points.join(" ")
                    );
                }
            }
        }
        let _ = writeln!(svg, "</g>");
    }
    for (i, track) in tracks.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let x = MARGIN + i as f64 * 110.0;
        let y = height - 8.0;
        let _ = writeln!(svg, r#"<text x="{x}" y="{y}" fill="{colour}">track {track}: est solid, gt dashed</text>"#);
    }
    svg.push_str("</svg>\n");
    svg
}

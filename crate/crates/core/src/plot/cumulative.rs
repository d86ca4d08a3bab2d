//! The cumulative calibration plot: the walk `S` against `t`, with either
//! the BM or the BB overlay.

use super::svg::{draw_axes, num, tick_label, Frame, SvgDoc};
use super::{padded, PlotStyle, MARGIN_BOTTOM, MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP};
use crate::dist::{critical_value, Reference};
use crate::error::{Error, Result};
use crate::inference::{BbTestResult, BmTestResult};
use crate::process::{walk_statistics, CumulativeProcess};

/// Predicted risks labelled on the secondary top axis.
pub const SECONDARY_AXIS_TICKS: [f64; 5] = [0.01, 0.05, 0.1, 0.25, 0.5];

const TRIANGLE_BASE: f64 = 0.1;
const MIN_LABEL_GAP_PX: f64 = 20.0;

/// Which test result to draw over the walk.
#[derive(Debug, Clone, Copy)]
pub enum Overlay<'r> {
    Bm(&'r BmTestResult),
    Bb(&'r BbTestResult),
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn check_pairing(proc: &CumulativeProcess<'_>, overlay: Overlay<'_>) -> Result<()> {
    if proc.is_empty() {
        return Err(Error::EmptyInput);
    }
    let stats = walk_statistics(proc);
    let ok = match overlay {
        Overlay::Bm(r) => close(r.s_star, stats.s_star) && r.location.step == stats.argmax_bm.step,
        Overlay::Bb(r) => {
            close(r.s_n, stats.s_n)
                && close(r.b_star, stats.b_star)
                && r.location_bridge.step == stats.argmax_bb.step
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::PlotMismatch(
            "test result was not computed from this process".into(),
        ))
    }
}

fn critical(overlay: Overlay<'_>, style: &PlotStyle) -> Result<f64> {
    let level = 1.0 - style.significance_level;
    match overlay {
        Overlay::Bm(_) => critical_value(Reference::SupAbsBm, level),
        Overlay::Bb(_) => critical_value(Reference::Kolmogorov, level),
    }
}

/// Two-sided normal critical value for `S_n`.
fn terminal_critical(style: &PlotStyle) -> Result<f64> {
    crate::dist::std_normal_quantile(1.0 - 0.5 * style.significance_level)
}

/// Data-to-pixel frame used by [`render_cumulative_plot`] for the same
/// arguments.
pub fn cumulative_frame(
    proc: &CumulativeProcess<'_>,
    overlay: Overlay<'_>,
    style: &PlotStyle,
) -> Result<Frame> {
    style.validate()?;
    check_pairing(proc, overlay)?;
    let c = critical(overlay, style)?;
    let mut lo: f64 = 0.0;
    let mut hi: f64 = 0.0;
    for &s in proc.walk() {
        lo = lo.min(s);
        hi = hi.max(s);
    }
    if style.show_triangle {
        lo = lo.min(-1.0);
        hi = hi.max(1.0);
    }
    match overlay {
        Overlay::Bm(_) => {
            lo = lo.min(-c);
            hi = hi.max(c);
        }
        Overlay::Bb(r) => {
            let z = terminal_critical(style)?;
            let ends = [c, -c, r.s_n + c, r.s_n - c, z, -z];
            for e in ends {
                lo = lo.min(e);
                hi = hi.max(e);
            }
        }
    }
    let (y_min, y_max) = padded(lo, hi, 0.06);
    Ok(Frame {
        x_min: 0.0,
        x_max: 1.0,
        y_min,
        y_max,
        left: MARGIN_LEFT,
        right: style.width - MARGIN_RIGHT,
        top: MARGIN_TOP,
        bottom: style.height - MARGIN_BOTTOM,
    })
}

/// Time `t` reached once every prediction `≤ π` has entered the walk.
fn time_at_prediction(proc: &CumulativeProcess<'_>, pi: f64) -> Option<f64> {
    let preds = proc.source().predictions();
    let first = *preds.first()?;
    let last = *preds.last()?;
    if pi < first || pi > last {
        return None;
    }
    let k = preds.partition_point(|&p| p <= pi);
    Some(if k == 0 { 0.0 } else { proc.times()[k - 1] })
}

fn secondary_axis(doc: &mut SvgDoc, proc: &CumulativeProcess<'_>, frame: &Frame) {
    let axis = "#333333";
    doc.open_group("secondary-axis", None);
    doc.line("axis", (frame.left, frame.top), (frame.right, frame.top), axis, 1.0, false);
    let mut last_px = f64::NEG_INFINITY;
    for &pi in &SECONDARY_AXIS_TICKS {
        let Some(t) = time_at_prediction(proc, pi) else {
            continue;
        };
        let px = frame.x_px(t);
        if px - last_px < MIN_LABEL_GAP_PX {
            continue;
        }
        last_px = px;
        doc.line("tick", (px, frame.top - 4.0), (px, frame.top), axis, 1.0, false);
        doc.text("tick-label", (px, frame.top - 7.0), "middle", 10.0, &tick_label(pi));
    }
    doc.text(
        "axis-label",
        (0.5 * (frame.left + frame.right), frame.top - 22.0),
        "middle",
        11.0,
        "Predicted risk",
    );
    doc.close_group();
}

/// Renders the walk with the requested overlay.
///
/// The document contains exactly one `<polyline>`, the walk, through the
/// origin and every `(t_i, S_i)`.
pub fn render_cumulative_plot(
    proc: &CumulativeProcess<'_>,
    overlay: Overlay<'_>,
    style: &PlotStyle,
) -> Result<String> {
    let frame = cumulative_frame(proc, overlay, style)?;
    let c = critical(overlay, style)?;
    let pal = &style.palette;
    let mut doc = SvgDoc::new(style.width, style.height);

    draw_axes(&mut doc, &frame, "t", "S");
    let zero = frame.y_px(0.0);
    doc.line("baseline", (frame.left, zero), (frame.right, zero), &pal.reference, 0.8, false);
    if style.show_secondary_axis {
        secondary_axis(&mut doc, proc, &frame);
    }

    if style.show_triangle {
        let pts = [
            frame.to_px(0.0, 1.0),
            frame.to_px(TRIANGLE_BASE, 0.0),
            frame.to_px(0.0, -1.0),
        ];
        doc.polygon("triangle", &pts, &pal.reference, "none");
    }

    let level = format!("{:.0}%", 100.0 * (1.0 - style.significance_level));
    match overlay {
        Overlay::Bm(r) => {
            for side in [c, -c] {
                let y = frame.y_px(side);
                doc.line("critical-line", (frame.left, y), (frame.right, y), &pal.critical, 1.0, true);
            }
            let k = r.location.step - 1;
            let t = proc.times()[k];
            let s = proc.walk()[k];
            doc.line("statistic-marker", frame.to_px(t, 0.0), frame.to_px(t, s), &pal.markers, 2.0, false);
            doc.text(
                "legend",
                (frame.left + 8.0, frame.top + 14.0),
                "start",
                11.0,
                &format!(
                    "S* = {:.4} at π* = {:.4}, p = {:.4} ({} critical ±{:.3})",
                    r.s_star, r.location.prediction, r.p_value, level, c
                ),
            );
        }
        Overlay::Bb(r) => {
            doc.line("bridge", frame.to_px(0.0, 0.0), frame.to_px(1.0, r.s_n), &pal.bridge, 1.5, false);
            let k = r.location_bridge.step - 1;
            let t = proc.times()[k];
            let s = proc.walk()[k];
            let on_chord = t * r.s_n;
            let side = if s >= on_chord { 1.0 } else { -1.0 };
            doc.line(
                "critical-line",
                frame.to_px(0.0, side * c),
                frame.to_px(1.0, r.s_n + side * c),
                &pal.critical,
                1.0,
                true,
            );
            let z = terminal_critical(style)?;
            for zs in [z, -z] {
                let y = frame.y_px(zs);
                let x = frame.x_px(1.0);
                doc.line("terminal-critical", (x - 6.0, y), (x + 6.0, y), &pal.critical, 1.0, true);
            }
            doc.line(
                "terminal-marker",
                frame.to_px(1.0, 0.0),
                frame.to_px(1.0, r.s_n),
                &pal.terminal,
                2.0,
                false,
            );
            doc.line(
                "statistic-marker",
                frame.to_px(t, on_chord),
                frame.to_px(t, s),
                &pal.markers,
                2.0,
                false,
            );
            doc.text(
                "legend",
                (frame.left + 8.0, frame.top + 14.0),
                "start",
                11.0,
                &format!(
                    "S_n = {:.4} (p_A = {:.4}), B* = {:.4} at π* = {:.4} (p_B = {:.4}), p = {:.4}",
                    r.s_n, r.p_a, r.b_star, r.location_bridge.prediction, r.p_b, r.p_unified
                ),
            );
        }
    }

    let mut points = Vec::with_capacity(proc.len() + 1);
    points.push(frame.to_px(0.0, 0.0));
    for (&t, &s) in proc.times().iter().zip(proc.walk()) {
        points.push(frame.to_px(t, s));
    }
    doc.polyline("walk", &points, &pal.walk, 1.2);

    doc.raw(&format!(
        "<desc>n={} T={}</desc>\n",
        proc.len(),
        num(proc.total_variance())
    ));
    Ok(doc.finish())
}

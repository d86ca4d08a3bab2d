//! Grouped calibration plot: observed event proportion against mean
//! predicted risk per quantile group.

use super::svg::{draw_axes, Frame, SvgDoc};
use super::{PlotStyle, MARGIN_BOTTOM, MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP};
use crate::error::Result;
use crate::inference::{group_table, quantile_groups, HlGroup};
use crate::process::CalibrationDataset;

const MARKER_RADIUS: f64 = 3.5;
const WHISKER_CAP_PX: f64 = 3.0;

struct Point {
    x: f64,
    y: f64,
    se: f64,
}

fn points(table: &[HlGroup]) -> Vec<Point> {
    table
        .iter()
        .map(|g| {
            let n = g.size as f64;
            let y = g.observed / n;
            Point {
                x: g.mean_prediction,
                y,
                se: (y * (1.0 - y) / n).sqrt(),
            }
        })
        .collect()
}

fn layout(pts: &[Point], style: &PlotStyle) -> Frame {
    let mut hi: f64 = 0.0;
    let mut lo: f64 = 0.0;
    for p in pts {
        hi = hi.max(p.x).max(p.y + p.se);
        lo = lo.min(p.y - p.se);
    }
    // round the shared upper limit up to a tenth so both axes read alike
    let upper = ((hi * 1.05 * 10.0).ceil() / 10.0).clamp(0.1, 1.0).max(hi);
    let square = (style.width - MARGIN_LEFT - MARGIN_RIGHT).min(style.height - MARGIN_TOP - MARGIN_BOTTOM);
    Frame {
        x_min: 0.0,
        x_max: upper,
        y_min: lo,
        y_max: upper,
        left: MARGIN_LEFT,
        right: MARGIN_LEFT + square,
        top: MARGIN_TOP,
        bottom: MARGIN_TOP + square,
    }
}

/// Frame used by [`render_binned_calibration_plot`] for the same arguments.
pub fn binned_frame(data: &CalibrationDataset, groups: usize, style: &PlotStyle) -> Result<Frame> {
    style.validate()?;
    let table = group_table(data, &quantile_groups(data, groups)?);
    Ok(layout(&points(&table), style))
}

pub fn render_binned_calibration_plot(
    data: &CalibrationDataset,
    groups: usize,
    style: &PlotStyle,
) -> Result<String> {
    style.validate()?;
    let table = group_table(data, &quantile_groups(data, groups)?);
    let pts = points(&table);
    let frame = layout(&pts, style);
    let pal = &style.palette;
    let mut doc = SvgDoc::new(style.width, style.height);
    draw_axes(&mut doc, &frame, "Predicted risk", "Observed proportion");

    let lim = frame.x_max.min(frame.y_max);
    doc.line("identity", frame.to_px(0.0, 0.0), frame.to_px(lim, lim), &pal.reference, 1.0, true);
    for p in &pts {
        let (cx, _) = frame.to_px(p.x, p.y);
        let top = frame.y_px(p.y + p.se);
        let bottom = frame.y_px(p.y - p.se);
        doc.line("whisker", (cx, bottom), (cx, top), &pal.walk, 1.0, false);
        for cap in [top, bottom] {
            doc.line("whisker-cap", (cx - WHISKER_CAP_PX, cap), (cx + WHISKER_CAP_PX, cap), &pal.walk, 1.0, false);
        }
        doc.circle("group-marker", frame.to_px(p.x, p.y), MARKER_RADIUS, &pal.walk);
    }
    doc.text(
        "legend",
        (frame.left + 8.0, frame.top - 12.0),
        "start",
        11.0,
        &format!("{} groups, n = {}", pts.len(), data.len()),
    );
    Ok(doc.finish())
}

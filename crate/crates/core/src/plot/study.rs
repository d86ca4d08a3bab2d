//! Panel figures for simulation studies: p-value ECDFs for null studies and
//! grouped rejection-rate bars for power studies.

use super::svg::{num, tick_label, Frame, SvgDoc};
use super::PlotStyle;
use crate::error::{Error, Result};
use crate::sim::{pvalue_ecdf, SimulationSummary, StudyKind, StudyResult, TestKind};

const PANEL_W: f64 = 220.0;
const PANEL_H: f64 = 200.0;
const INNER_LEFT: f64 = 40.0;
const INNER_RIGHT: f64 = 10.0;
const INNER_TOP: f64 = 34.0;
const INNER_BOTTOM: f64 = 30.0;
const OUTER: f64 = 16.0;

const SERIES: [(TestKind, &str); 4] = [
    (TestKind::Lr, "#2ca02c"),
    (TestKind::Hl, "#9467bd"),
    (TestKind::Bm, "#d62728"),
    (TestKind::Bb, "#1f77b4"),
];

fn color(kind: TestKind) -> &'static str {
    SERIES.iter().find(|(k, _)| *k == kind).map_or("#000000", |(_, c)| c)
}

fn panel_frame(y_max: f64) -> Frame {
    Frame {
        x_min: 0.0,
        x_max: 1.0,
        y_min: 0.0,
        y_max,
        left: INNER_LEFT,
        right: PANEL_W - INNER_RIGHT,
        top: INNER_TOP,
        bottom: PANEL_H - INNER_BOTTOM,
    }
}

fn panel_axes(doc: &mut SvgDoc, frame: &Frame, y_ticks: &[f64]) {
    let axis = "#333333";
    doc.line("axis", (frame.left, frame.bottom), (frame.right, frame.bottom), axis, 1.0, false);
    doc.line("axis", (frame.left, frame.top), (frame.left, frame.bottom), axis, 1.0, false);
    for &y in y_ticks {
        let py = frame.y_px(y);
        doc.line("tick", (frame.left - 3.0, py), (frame.left, py), axis, 1.0, false);
        doc.text("tick-label", (frame.left - 5.0, py + 3.0), "end", 9.0, &tick_label(y));
    }
}

fn cell_title(cell: &SimulationSummary, kind: StudyKind) -> String {
    let s = &cell.scenario;
    match kind {
        StudyKind::Null => format!("β0 = {}, n = {}", tick_label(s.beta0), s.n),
        StudyKind::Power => format!("a = {}, b = {}, n = {}", tick_label(s.a), tick_label(s.b), s.n),
    }
}

/// Number of distinct values along the fastest-varying grid axis.
fn columns(study: &StudyResult) -> usize {
    let key = |c: &SimulationSummary| match study.kind {
        StudyKind::Null => c.scenario.beta0,
        StudyKind::Power => c.scenario.b,
    };
    let mut seen: Vec<f64> = Vec::new();
    for c in &study.cells {
        let v = key(c);
        if !seen.iter().any(|s| s.to_bits() == v.to_bits()) {
            seen.push(v);
        }
    }
    seen.len().max(1)
}

fn ecdf_panel(doc: &mut SvgDoc, cell: &SimulationSummary) -> Result<()> {
    let frame = panel_frame(1.0);
    panel_axes(doc, &frame, &[0.0, 0.5, 1.0]);
    for x in [0.0, 0.5, 1.0] {
        let px = frame.x_px(x);
        doc.text("tick-label", (px, frame.bottom + 12.0), "middle", 9.0, &tick_label(x));
    }
    doc.line("identity", frame.to_px(0.0, 0.0), frame.to_px(1.0, 1.0), "#b0b0b0", 1.0, true);
    let alpha = cell.scenario.alpha;
    for (row, summary) in cell.tests.iter().enumerate() {
        let pvals = summary.p_values.as_deref().ok_or_else(|| {
            Error::PlotMismatch("null study cell has no recorded p-values".into())
        })?;
        let ecdf = pvalue_ecdf(pvals)?;
        let pts: Vec<(f64, f64)> = ecdf
            .grid
            .iter()
            .zip(&ecdf.values)
            .map(|(&x, &y)| frame.to_px(x, y))
            .collect();
        let stroke = color(summary.test);
        doc.path(&format!("ecdf {}", summary.test.label().to_lowercase()), &pts, stroke, 1.2);
        doc.raw(&format!(
            "<text class=\"rejection\" data-test=\"{}\" x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\" fill=\"{}\">{}</text>\n",
            summary.test.label(),
            num(frame.right - 4.0),
            num(frame.bottom - 8.0 - 13.0 * row as f64),
            stroke,
            format_args!("{} {:.3}", summary.test.label(), summary.proportion)
        ));
    }
    doc.raw(&format!(
        "<desc>rejection proportion at level {}</desc>\n",
        num(alpha)
    ));
    Ok(())
}

fn power_panel(doc: &mut SvgDoc, cell: &SimulationSummary) {
    let frame = panel_frame(1.0);
    panel_axes(doc, &frame, &[0.0, 0.25, 0.5, 0.75, 1.0]);
    let alpha = cell.scenario.alpha;
    let ya = frame.y_px(alpha);
    doc.line("alpha-line", (frame.left, ya), (frame.right, ya), "#b0b0b0", 1.0, true);
    let slots = cell.tests.len().max(1) as f64;
    let slot_w = (frame.right - frame.left) / slots;
    for (i, summary) in cell.tests.iter().enumerate() {
        let x0 = frame.left + slot_w * (i as f64 + 0.15);
        let w = slot_w * 0.7;
        let top = frame.y_px(summary.proportion);
        doc.rect(
            "bar",
            x0,
            top,
            w,
            frame.bottom - top,
            color(summary.test),
            &format!(" data-test=\"{}\"", summary.test.label()),
        );
        doc.text(
            "bar-label",
            (x0 + 0.5 * w, frame.bottom + 12.0),
            "middle",
            9.0,
            summary.test.label(),
        );
        doc.raw(&format!(
            "<text class=\"rejection\" data-test=\"{}\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"8\">{:.3}</text>\n",
            summary.test.label(),
            num(x0 + 0.5 * w),
            num(top - 3.0),
            summary.proportion
        ));
    }
}

/// One figure for a whole study: one panel per grid cell, laid out with the
/// fastest-varying grid parameter along rows.
pub fn render_study_figure(study: &StudyResult, style: &PlotStyle) -> Result<String> {
    style.validate()?;
    if study.cells.is_empty() {
        return Err(Error::EmptyGrid("study cells"));
    }
    let cols = columns(study);
    let rows = study.cells.len().div_ceil(cols);
    let width = 2.0 * OUTER + cols as f64 * PANEL_W;
    let height = 2.0 * OUTER + 20.0 + rows as f64 * PANEL_H;
    let mut doc = SvgDoc::new(width, height);
    let heading = match study.kind {
        StudyKind::Null => "Null p-value ECDFs",
        StudyKind::Power => "Rejection proportions",
    };
    doc.text("title", (OUTER, OUTER + 6.0), "start", 13.0, &format!(
        "{heading} ({} replications, seed {})",
        study.replications, study.seed
    ));
    for (idx, cell) in study.cells.iter().enumerate() {
        let dx = OUTER + (idx % cols) as f64 * PANEL_W;
        let dy = OUTER + 20.0 + (idx / cols) as f64 * PANEL_H;
        doc.open_group("panel", Some((dx, dy)));
        doc.text("panel-title", (0.5 * PANEL_W, 16.0), "middle", 10.0, &cell_title(cell, study.kind));
        match study.kind {
            StudyKind::Null => ecdf_panel(&mut doc, cell)?,
            StudyKind::Power => power_panel(&mut doc, cell),
        }
        doc.close_group();
    }
    Ok(doc.finish())
}

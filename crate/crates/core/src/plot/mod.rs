//! SVG rendering of calibration figures.
//!
//! All renderers are pure functions returning a self-contained SVG 1.1
//! document. Coordinates are written with six decimals, so equal inputs
//! always give byte-identical output.

mod binned;
mod cumulative;
mod study;
mod svg;

pub use binned::{binned_frame, render_binned_calibration_plot};
pub use cumulative::{cumulative_frame, render_cumulative_plot, Overlay, SECONDARY_AXIS_TICKS};
pub use study::render_study_figure;
pub use svg::Frame;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub walk: String,
    pub bridge: String,
    pub markers: String,
    pub terminal: String,
    pub critical: String,
    pub reference: String,
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            walk: "#000000".into(),
            bridge: "#9a9a9a".into(),
            markers: "#d62728".into(),
            terminal: "#1f77b4".into(),
            critical: "#555555".into(),
            reference: "#b0b0b0".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotStyle {
    pub width: f64,
    pub height: f64,
    pub significance_level: f64,
    pub show_triangle: bool,
    pub show_secondary_axis: bool,
    pub palette: Palette,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            width: 640.0,
            height: 440.0,
            significance_level: 0.05,
            show_triangle: true,
            show_secondary_axis: true,
            palette: Palette::default(),
        }
    }
}

impl PlotStyle {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.height > 0.0 && self.width.is_finite() && self.height.is_finite()) {
            return Err(Error::PlotMismatch(format!(
                "plot dimensions must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.significance_level > 0.0 && self.significance_level < 1.0) {
            return Err(Error::LevelOutOfRange(self.significance_level));
        }
        Ok(())
    }
}

/// Pixel margins around the data rectangle.
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 56.0;
const MARGIN_BOTTOM: f64 = 48.0;

fn padded(lo: f64, hi: f64, frac: f64) -> (f64, f64) {
    let span = (hi - lo).max(1e-9);
    (lo - frac * span, hi + frac * span)
}

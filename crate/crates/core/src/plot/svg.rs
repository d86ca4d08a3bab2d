//! Minimal SVG 1.1 writer and the affine data-to-pixel transform.

use std::fmt::Write as _;

/// Formats a coordinate with at most six decimals and no trailing zeros.
pub(crate) fn num(v: f64) -> String {
    let mut s = format!("{v:.6}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

pub(crate) fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Affine map from a data rectangle onto a pixel rectangle. The y axis is
/// flipped so larger data values sit higher on the page.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
}

impl Frame {
    pub fn x_px(&self, x: f64) -> f64 {
        self.left + (x - self.x_min) / (self.x_max - self.x_min) * (self.right - self.left)
    }

    pub fn y_px(&self, y: f64) -> f64 {
        self.bottom - (y - self.y_min) / (self.y_max - self.y_min) * (self.bottom - self.top)
    }

    pub fn to_px(&self, x: f64, y: f64) -> (f64, f64) {
        (self.x_px(x), self.y_px(y))
    }

    pub fn x_data(&self, px: f64) -> f64 {
        self.x_min + (px - self.left) / (self.right - self.left) * (self.x_max - self.x_min)
    }

    pub fn y_data(&self, py: f64) -> f64 {
        self.y_min + (self.bottom - py) / (self.bottom - self.top) * (self.y_max - self.y_min)
    }

    pub fn to_data(&self, px: f64, py: f64) -> (f64, f64) {
        (self.x_data(px), self.y_data(py))
    }
}

/// "Nice" tick positions covering `[lo, hi]`.
pub(crate) fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

pub(crate) fn tick_label(v: f64) -> String {
    let s = format!("{:.3}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

pub(crate) struct SvgDoc {
    buf: String,
}

impl SvgDoc {
    pub(crate) fn new(width: f64, height: f64) -> Self {
        let mut buf = String::new();
        buf.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            buf,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
            w = num(width),
            h = num(height)
        );
        let _ = writeln!(
            buf,
            "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>",
            num(width),
            num(height)
        );
        Self { buf }
    }

    pub(crate) fn open_group(&mut self, class: &str, transform: Option<(f64, f64)>) {
        match transform {
            Some((dx, dy)) => {
                let _ = writeln!(
                    self.buf,
                    "<g class=\"{}\" transform=\"translate({} {})\">",
                    escape(class),
                    num(dx),
                    num(dy)
                );
            }
            None => {
                let _ = writeln!(self.buf, "<g class=\"{}\">", escape(class));
            }
        }
    }

    pub(crate) fn close_group(&mut self) {
        self.buf.push_str("</g>\n");
    }

    pub(crate) fn line(&mut self, class: &str, a: (f64, f64), b: (f64, f64), stroke: &str, width: f64, dashed: bool) {
        let _ = writeln!(
            self.buf,
            "<line class=\"{}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"{}\"{}/>",
            escape(class),
            num(a.0),
            num(a.1),
            num(b.0),
            num(b.1),
            escape(stroke),
            num(width),
            if dashed { " stroke-dasharray=\"6 4\"" } else { "" }
        );
    }

    pub(crate) fn polyline(&mut self, class: &str, points: &[(f64, f64)], stroke: &str, width: f64) {
        let _ = write!(self.buf, "<polyline class=\"{}\" points=\"", escape(class));
        for (i, (x, y)) in points.iter().enumerate() {
            if i > 0 {
                self.buf.push(' ');
            }
            let _ = write!(self.buf, "{},{}", num(*x), num(*y));
        }
        let _ = writeln!(
            self.buf,
            "\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\" stroke-linejoin=\"round\"/>",
            escape(stroke),
            num(width)
        );
    }

    /// Open path through `points` (used where a polyline would be ambiguous
    /// with the walk).
    pub(crate) fn path(&mut self, class: &str, points: &[(f64, f64)], stroke: &str, width: f64) {
        let _ = write!(self.buf, "<path class=\"{}\" d=\"", escape(class));
        for (i, (x, y)) in points.iter().enumerate() {
            let _ = write!(self.buf, "{}{} {}", if i == 0 { "M" } else { " L" }, num(*x), num(*y));
        }
        let _ = writeln!(
            self.buf,
            "\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\"/>",
            escape(stroke),
            num(width)
        );
    }

    pub(crate) fn polygon(&mut self, class: &str, points: &[(f64, f64)], stroke: &str, fill: &str) {
        let pts: Vec<String> = points
            .iter()
            .map(|(x, y)| format!("{},{}", num(*x), num(*y)))
            .collect();
        let _ = writeln!(
            self.buf,
            "<polygon class=\"{}\" points=\"{}\" fill=\"{}\" stroke=\"{}\" stroke-width=\"1\"/>",
            escape(class),
            pts.join(" "),
            escape(fill),
            escape(stroke)
        );
    }

    pub(crate) fn rect(&mut self, class: &str, x: f64, y: f64, w: f64, h: f64, fill: &str, extra: &str) {
        let _ = writeln!(
            self.buf,
            "<rect class=\"{}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#333333\" stroke-width=\"0.5\"{}/>",
            escape(class),
            num(x),
            num(y),
            num(w.max(0.0)),
            num(h.max(0.0)),
            escape(fill),
            extra
        );
    }

    pub(crate) fn circle(&mut self, class: &str, c: (f64, f64), r: f64, fill: &str) {
        let _ = writeln!(
            self.buf,
            "<circle class=\"{}\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"/>",
            escape(class),
            num(c.0),
            num(c.1),
            num(r),
            escape(fill)
        );
    }

    pub(crate) fn text(&mut self, class: &str, at: (f64, f64), anchor: &str, size: f64, content: &str) {
        let _ = writeln!(
            self.buf,
            "<text class=\"{}\" x=\"{}\" y=\"{}\" text-anchor=\"{}\" font-family=\"sans-serif\" font-size=\"{}\">{}</text>",
            escape(class),
            num(at.0),
            num(at.1),
            anchor,
            num(size),
            escape(content)
        );
    }

    /// Raw element text; caller guarantees well-formedness.
    pub(crate) fn raw(&mut self, s: &str) {
        self.buf.push_str(s);
    }

    pub(crate) fn finish(mut self) -> String {
        self.buf.push_str("</svg>\n");
        self.buf
    }
}

/// Frame rectangle with axes, ticks and labels.
pub(crate) fn draw_axes(doc: &mut SvgDoc, frame: &Frame, x_label: &str, y_label: &str) {
    let axis = "#333333";
    doc.line("axis", (frame.left, frame.bottom), (frame.right, frame.bottom), axis, 1.0, false);
    doc.line("axis", (frame.left, frame.top), (frame.left, frame.bottom), axis, 1.0, false);
    for x in ticks(frame.x_min, frame.x_max, 5) {
        let px = frame.x_px(x);
        doc.line("tick", (px, frame.bottom), (px, frame.bottom + 4.0), axis, 1.0, false);
        doc.text("tick-label", (px, frame.bottom + 16.0), "middle", 10.0, &tick_label(x));
    }
    for y in ticks(frame.y_min, frame.y_max, 6) {
        let py = frame.y_px(y);
        doc.line("tick", (frame.left - 4.0, py), (frame.left, py), axis, 1.0, false);
        doc.text("tick-label", (frame.left - 6.0, py + 3.5), "end", 10.0, &tick_label(y));
    }
    doc.text(
        "axis-label",
        (0.5 * (frame.left + frame.right), frame.bottom + 32.0),
        "middle",
        11.0,
        x_label,
    );
    let cx = frame.left - 40.0;
    let cy = 0.5 * (frame.top + frame.bottom);
    doc.raw(&format!(
        "<text class=\"axis-label\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" transform=\"rotate(-90 {} {})\">{}</text>\n",
        num(cx),
        num(cy),
        num(cx),
        num(cy),
        escape(y_label)
    ));
}

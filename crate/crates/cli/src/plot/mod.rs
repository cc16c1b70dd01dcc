//! Static SVG figures: heatmaps of the SNR plane and noise floor, curves with
//! error bars, singular spectra and correlation histograms.
//!
//! Output is plain text built with fixed-precision numbers, so the same input
//! always produces the same bytes. Files are written atomically.

mod heatmap;
mod lines;
mod svg;

use std::path::Path;

use sdrbench_core::experiments::atomic_write;

pub use heatmap::{heatmap_panels, render_heatmap, render_heatmap_panels, HeatPanel, HeatValue};
pub use lines::{
    curve_panels, histogram_panels, render_curves, render_histogram, render_lines, render_spectrum, spectrum_panels,
    LinePanel, Point, Series,
};

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("nothing to plot")]
    NothingToPlot,
    #[error("invalid plot spec: {0}")]
    InvalidSpec(String),
    #[error("grid does not fit this plot: {0}")]
    Shape(String),
    #[error(transparent)]
    Io(#[from] sdrbench_core::Error),
}

pub type Result<T> = std::result::Result<T, PlotError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Heatmap,
    LineWithErrorbars,
    Spectrum,
    Histogram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Color scale bounds for heatmaps. Values above `color_max` are drawn
    /// at the top color with an overflow marker; values below clamp.
    pub color_min: f64,
    pub color_max: f64,
    /// Panel grid as rows × cols; `None` picks at most three columns.
    pub layout: Option<(usize, usize)>,
    /// Heatmaps of RC′: add a panel with the noise floor of each cell.
    pub noise_panel: bool,
    pub log_x: bool,
    pub log_y: bool,
}

impl PlotSpec {
    fn base(kind: PlotKind, x_label: &str, y_label: &str) -> Self {
        PlotSpec {
            kind,
            title: String::new(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            color_min: 0.0,
            color_max: 1.0,
            layout: None,
            noise_panel: false,
            log_x: false,
            log_y: false,
        }
    }

    pub fn heatmap(x_label: &str, y_label: &str) -> Self {
        Self::base(PlotKind::Heatmap, x_label, y_label)
    }

    pub fn curves(x_label: &str, y_label: &str) -> Self {
        Self::base(PlotKind::LineWithErrorbars, x_label, y_label)
    }

    pub fn spectrum() -> Self {
        PlotSpec { log_y: true, ..Self::base(PlotKind::Spectrum, "index", "singular value") }
    }

    pub fn histogram() -> Self {
        Self::base(PlotKind::Histogram, "correlation", "fraction of pairs")
    }

    pub fn with_title(mut self, title: &str) -> Self {
        self.title = title.into();
        self
    }

    /// Rows and columns for `panels` panels.
    pub fn grid_for(&self, panels: usize) -> Result<(usize, usize)> {
        if !(self.color_min.is_finite() && self.color_max.is_finite() && self.color_min < self.color_max) {
            return Err(PlotError::InvalidSpec(format!(
                "color scale [{}, {}] must be finite and increasing",
                self.color_min, self.color_max
            )));
        }
        match self.layout {
            Some((r, c)) if r * c >= panels => Ok((r, c)),
            Some((r, c)) => Err(PlotError::InvalidSpec(format!("layout {r}x{c} cannot hold {panels} panels"))),
            None => {
                let cols = panels.clamp(1, 3);
                Ok((panels.div_ceil(cols).max(1), cols))
            }
        }
    }

    fn expect(&self, kind: PlotKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(PlotError::InvalidSpec(format!("expected a {kind:?} spec, got {:?}", self.kind)))
        }
    }
}

/// Viridis at nine evenly spaced stops.
const VIRIDIS: [(u8, u8, u8); 9] = [
    (0x44, 0x01, 0x54),
    (0x47, 0x2d, 0x7b),
    (0x3b, 0x52, 0x8b),
    (0x2c, 0x72, 0x8e),
    (0x21, 0x91, 0x8c),
    (0x28, 0xae, 0x80),
    (0x5e, 0xc9, 0x62),
    (0xad, 0xdc, 0x30),
    (0xfd, 0xe7, 0x25),
];

/// Color for `t` in `[0, 1]` (clamped).
pub fn colormap(t: f64) -> String {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let pos = t * (VIRIDIS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(VIRIDIS.len() - 2);
    let f = pos - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Line colors for series, in legend order.
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

fn write_svg(path: &Path, doc: &str) -> Result<()> {
    atomic_write(path, doc.as_bytes())?;
    Ok(())
}

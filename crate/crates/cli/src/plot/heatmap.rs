use std::collections::BTreeMap;
use std::path::Path;

use sdrbench_core::experiments::GridResult;
use sdrbench_core::Method;

use super::svg::{escape, label, num, Svg};
use super::{colormap, write_svg, PlotError, PlotKind, PlotSpec, Result, VIRIDIS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeatValue {
    Value(f64),
    /// The method could not be fitted in any trial of this cell.
    Degenerate,
    Missing,
}

/// One heatmap panel. `values[row][col]`, row 0 at the bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatPanel {
    pub title: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub values: Vec<Vec<HeatValue>>,
}

fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| a.to_bits() == b.to_bits());
    v
}

fn position(axis: &[f64], v: f64) -> usize {
    axis.iter().position(|a| a.to_bits() == v.to_bits()).expect("value drawn from the axis")
}

fn single<T: PartialEq + Copy + std::fmt::Debug>(what: &str, mut it: impl Iterator<Item = T>) -> Result<()> {
    let first = it.next();
    if let Some(other) = it.find(|v| Some(*v) != first) {
        return Err(PlotError::Shape(format!("more than one {what} ({:?} and {other:?}); slice the grid first", first.unwrap())));
    }
    Ok(())
}

/// Panels for a grid: one per method (and k) over the SNR plane, plus the
/// noise panel when asked; or a single `T × k` panel for a noise-floor map.
pub fn heatmap_panels(grid: &GridResult, spec: &PlotSpec) -> Result<Vec<HeatPanel>> {
    if grid.cells.is_empty() {
        if grid.rc0.is_empty() {
            return Err(PlotError::NothingToPlot);
        }
        let x = distinct(grid.rc0.iter().map(|c| c.k_x as f64));
        let y = distinct(grid.rc0.iter().map(|c| c.t as f64));
        let mut values = vec![vec![HeatValue::Missing; x.len()]; y.len()];
        for c in &grid.rc0 {
            values[position(&y, c.t as f64)][position(&x, c.k_x as f64)] = HeatValue::Value(c.mean);
        }
        return Ok(vec![HeatPanel { title: "noise floor".into(), x, y, values }]);
    }

    single("T", grid.cells.iter().map(|c| c.t))?;
    single("N", grid.cells.iter().map(|c| (c.n_x, c.n_y)))?;
    single("signal count", grid.cells.iter().map(|c| (c.m_self, c.m_shared)))?;

    let x = distinct(grid.cells.iter().map(|c| c.gamma_self));
    let y = distinct(grid.cells.iter().map(|c| c.gamma_shared));
    let mut by_panel: BTreeMap<(Method, usize), Vec<Vec<HeatValue>>> = BTreeMap::new();
    let mut noise = vec![vec![HeatValue::Missing; x.len()]; y.len()];
    for c in &grid.cells {
        let grid_values = by_panel.entry((c.method, c.k)).or_insert_with(|| vec![vec![HeatValue::Missing; x.len()]; y.len()]);
        let (i, j) = (position(&y, c.gamma_shared), position(&x, c.gamma_self));
        if grid_values[i][j] != HeatValue::Missing {
            return Err(PlotError::Shape(format!("two cells for {} at the same SNR pair", c.method.label())));
        }
        grid_values[i][j] = match c.mean {
            Some(v) if !c.is_degenerate() => HeatValue::Value(v),
            _ => HeatValue::Degenerate,
        };
        if noise[i][j] == HeatValue::Missing {
            noise[i][j] = HeatValue::Value(c.rc0);
        }
    }

    let mut ks: BTreeMap<Method, usize> = BTreeMap::new();
    for (m, _) in by_panel.keys() {
        *ks.entry(*m).or_default() += 1;
    }
    let mut panels: Vec<HeatPanel> = by_panel
        .into_iter()
        .map(|((m, k), values)| {
            let title = if ks[&m] > 1 { format!("{} k={k}", m.label()) } else { m.label().to_string() };
            HeatPanel { title, x: x.clone(), y: y.clone(), values }
        })
        .collect();
    if spec.noise_panel {
        panels.push(HeatPanel { title: "noise".into(), x, y, values: noise });
    }
    Ok(panels)
}

/// Render `grid` as a heatmap figure at `path`.
pub fn render_heatmap(grid: &GridResult, spec: &PlotSpec, path: &Path) -> Result<()> {
    spec.expect(PlotKind::Heatmap)?;
    let panels = heatmap_panels(grid, spec)?;
    render_heatmap_panels(&panels, spec, path)
}

const PLOT: f64 = 180.0;
const LEFT: f64 = 60.0;
const TOP: f64 = 24.0;
const PANEL_W: f64 = PLOT + LEFT + 16.0;
const PANEL_H: f64 = PLOT + TOP + 60.0;
const BAR_AREA: f64 = 100.0;

fn tick_stride(n: usize) -> usize {
    n.div_ceil(8).max(1)
}

pub fn render_heatmap_panels(panels: &[HeatPanel], spec: &PlotSpec, path: &Path) -> Result<()> {
    if panels.is_empty() || panels.iter().all(|p| p.x.is_empty() || p.y.is_empty()) {
        return Err(PlotError::NothingToPlot);
    }
    let (rows, cols) = spec.grid_for(panels.len())?;
    let head = if spec.title.is_empty() { 8.0 } else { 30.0 };
    let width = 10.0 + cols as f64 * PANEL_W + BAR_AREA;
    let height = head + rows as f64 * PANEL_H + 8.0;
    let (lo, hi) = (spec.color_min, spec.color_max);

    let mut svg = Svg::new(width, height);
    svg.raw("<defs>");
    svg.raw(concat!(
        r##"<pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6" patternTransform="rotate(45)">"##,
        r##"<rect width="6" height="6" fill="#ffffff"/><line x1="0" y1="0" x2="0" y2="6" stroke="#808080" stroke-width="2"/></pattern>"##
    ));
    svg.raw(r#"<linearGradient id="colorbar-gradient" x1="0" y1="1" x2="0" y2="0">"#);
    for (i, _) in VIRIDIS.iter().enumerate() {
        let t = i as f64 / (VIRIDIS.len() - 1) as f64;
        svg.raw(&format!(r#"<stop offset="{}" stop-color="{}"/>"#, num(t), colormap(t)));
    }
    svg.raw("</linearGradient>\n</defs>");
    if !spec.title.is_empty() {
        svg.text(width / 2.0, 20.0, "middle", "title", &spec.title);
    }

    let mut any_degenerate = false;
    let mut any_overflow = false;
    for (p, panel) in panels.iter().enumerate() {
        let (r, c) = (p / cols, p % cols);
        let ox = 10.0 + c as f64 * PANEL_W + LEFT;
        let oy = head + r as f64 * PANEL_H + TOP;
        let (nx, ny) = (panel.x.len(), panel.y.len());
        let (w, h) = (PLOT / nx as f64, PLOT / ny as f64);
        svg.text(ox + PLOT / 2.0, oy - 8.0, "middle", "panel-title", &panel.title);

        for (i, row) in panel.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let (x, y) = (ox + j as f64 * w, oy + PLOT - (i + 1) as f64 * h);
                let at = format!("{}={}, {}={}", spec.x_label, label(panel.x[j]), spec.y_label, label(panel.y[i]));
                let (class, fill, tip) = match *v {
                    HeatValue::Value(v) => ("cell", colormap((v - lo) / (hi - lo)), format!("{at}: {v:.4}")),
                    HeatValue::Degenerate => {
                        any_degenerate = true;
                        ("cell degenerate", "url(#hatch)".into(), format!("{at}: degenerate"))
                    }
                    HeatValue::Missing => ("cell missing", "#d9d9d9".into(), format!("{at}: no data")),
                };
                svg.raw(&format!(
                    r#"<rect class="{class}" x="{}" y="{}" width="{}" height="{}" fill="{fill}"><title>{}</title></rect>"#,
                    num(x),
                    num(y),
                    num(w),
                    num(h),
                    escape(&tip)
                ));
                if matches!(*v, HeatValue::Value(v) if v > hi) {
                    any_overflow = true;
                    let m = 0.4 * w.min(h);
                    svg.raw(&format!(
                        r##"<path class="overflow" d="M{} {} h{} v{} z" fill="#ffffff" stroke="#000000" stroke-width="0.5"/>"##,
                        num(x + w - m),
                        num(y),
                        num(m),
                        num(m)
                    ));
                }
            }
        }
        svg.rect(ox, oy, PLOT, PLOT, r##"fill="none" stroke="#000000" stroke-width="0.8""##);

        let sx = tick_stride(nx);
        for j in (0..nx).step_by(sx) {
            let x = ox + (j as f64 + 0.5) * w;
            svg.line(x, oy + PLOT, x, oy + PLOT + 4.0, r##"stroke="#000000""##);
            svg.raw(&format!(
                r#"<text class="tick" x="{x}" y="{y}" text-anchor="end" transform="rotate(-40 {x} {y})">{}</text>"#,
                escape(&label(panel.x[j])),
                x = num(x + 3.0),
                y = num(oy + PLOT + 12.0)
            ));
        }
        let sy = tick_stride(ny);
        for i in (0..ny).step_by(sy) {
            let y = oy + PLOT - (i as f64 + 0.5) * h;
            svg.line(ox - 4.0, y, ox, y, r##"stroke="#000000""##);
            svg.text(ox - 6.0, y + 4.0, "end", "tick", &label(panel.y[i]));
        }
        svg.text(ox + PLOT / 2.0, oy + PLOT + 46.0, "middle", "axis-label", &spec.x_label);
        svg.vtext(ox - 44.0, oy + PLOT / 2.0, "axis-label", &spec.y_label);
    }

    let bx = width - BAR_AREA + 14.0;
    let by = head + TOP;
    svg.rect(bx, by, 16.0, PLOT, r##"class="colorbar" fill="url(#colorbar-gradient)" stroke="#000000" stroke-width="0.8""##);
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let y = by + PLOT - t * PLOT;
        svg.line(bx + 16.0, y, bx + 20.0, y, r##"stroke="#000000""##);
        svg.text(bx + 23.0, y + 4.0, "start", "colorbar-tick", &label(lo + t * (hi - lo)));
    }
    let mut ky = by + PLOT + 18.0;
    if any_overflow {
        svg.raw(&format!(
            r##"<path class="overflow-key" d="M{} {} h8 v8 z" fill="#ffffff" stroke="#000000" stroke-width="0.5"/>"##,
            num(bx + 8.0),
            num(ky - 8.0)
        ));
        svg.text(bx + 20.0, ky, "start", "legend", &format!("> {}", label(hi)));
        ky += 16.0;
    }
    if any_degenerate {
        svg.rect(bx, ky - 9.0, 10.0, 10.0, r##"class="degenerate-key" fill="url(#hatch)" stroke="#000000" stroke-width="0.5""##);
        svg.text(bx + 14.0, ky, "start", "legend", "degenerate");
    }
    write_svg(path, &svg.finish())
}

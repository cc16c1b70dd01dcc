use std::collections::BTreeMap;
use std::path::Path;

use sdrbench_core::experiments::{GridResult, SpectrumResult};
use sdrbench_core::mnist::CorrelationHistograms;
use sdrbench_core::Method;

use super::svg::{label, num, Svg};
use super::{write_svg, PlotError, PlotKind, PlotSpec, Result, PALETTE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    /// Half-height of the error bar, if any.
    pub err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinePanel {
    pub title: String,
    pub series: Vec<Series>,
}

/// Coordinates other than `k` and the method that tell panels apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct PanelKey {
    t: usize,
    n: (usize, usize),
    gamma_shared: u64,
    gamma_self: u64,
    m_self: usize,
    m_shared: usize,
}

fn panel_title(key: &PanelKey, varies: [bool; 4]) -> String {
    let [t, n, gamma, m] = varies;
    let (gs, gh) = (f64::from_bits(key.gamma_self), f64::from_bits(key.gamma_shared));
    let mut parts = Vec::new();
    if t {
        parts.push(format!("T = {}", key.t));
    }
    if n {
        parts.push(format!("N = {}", key.n.0));
    }
    if gamma {
        parts.push(if gs > 0.0 { format!("γ̃ = {}", label(gh / gs)) } else { format!("γ_shared = {}", label(gh)) });
    }
    if m {
        parts.push(if key.m_self > 0 {
            format!("m̃ = {}", label(key.m_shared as f64 / key.m_self as f64))
        } else {
            format!("m_shared = {}", key.m_shared)
        });
    }
    parts.join(", ")
}

/// One panel per combination of the non-`k` coordinates, one series per
/// method, `x = k`, `y` = mean RC′ with its standard deviation. Degenerate
/// cells are left out.
pub fn curve_panels(grid: &GridResult) -> Vec<LinePanel> {
    let mut groups: BTreeMap<PanelKey, BTreeMap<Method, Vec<Point>>> = BTreeMap::new();
    for c in &grid.cells {
        let key = PanelKey {
            t: c.t,
            n: (c.n_x, c.n_y),
            gamma_shared: c.gamma_shared.to_bits(),
            gamma_self: c.gamma_self.to_bits(),
            m_self: c.m_self,
            m_shared: c.m_shared,
        };
        let series = groups.entry(key).or_default().entry(c.method).or_default();
        if let (Some(y), false) = (c.mean, c.is_degenerate()) {
            series.push(Point { x: c.k as f64, y, err: c.std });
        }
    }
    let keys: Vec<&PanelKey> = groups.keys().collect();
    let differs = |f: &dyn Fn(&PanelKey) -> (u64, u64)| keys.windows(2).any(|w| f(w[0]) != f(w[1]));
    let varies = [
        differs(&|k| (k.t as u64, 0)),
        differs(&|k| (k.n.0 as u64, k.n.1 as u64)),
        differs(&|k| (k.gamma_self, k.gamma_shared)),
        differs(&|k| (k.m_self as u64, k.m_shared as u64)),
    ];
    groups
        .into_iter()
        .map(|(key, methods)| LinePanel {
            title: panel_title(&key, varies),
            series: methods
                .into_iter()
                .filter(|(_, p)| !p.is_empty())
                .map(|(m, mut points)| {
                    points.sort_by(|a, b| a.x.total_cmp(&b.x));
                    Series { label: m.label().to_string(), points }
                })
                .collect(),
        })
        .filter(|p: &LinePanel| !p.series.is_empty())
        .collect()
}

pub fn render_curves(grid: &GridResult, spec: &PlotSpec, path: &Path) -> Result<()> {
    spec.expect(PlotKind::LineWithErrorbars)?;
    render_lines(&curve_panels(grid), spec, path)
}

pub fn spectrum_panels(s: &SpectrumResult) -> Vec<LinePanel> {
    let series = |v: &[f64]| Series {
        label: "singular values".into(),
        points: v.iter().enumerate().map(|(i, &y)| Point { x: (i + 1) as f64, y, err: None }).collect(),
    };
    vec![
        LinePanel { title: "C_XX".into(), series: vec![series(&s.c_xx)] },
        LinePanel { title: "C_XY".into(), series: vec![series(&s.c_xy)] },
    ]
}

pub fn render_spectrum(s: &SpectrumResult, spec: &PlotSpec, path: &Path) -> Result<()> {
    spec.expect(PlotKind::Spectrum)?;
    render_lines(&spectrum_panels(s), spec, path)
}

/// Fractions per bin for the within-X, within-Y and cross pairs.
pub fn histogram_panels(h: &CorrelationHistograms) -> Vec<LinePanel> {
    let panel = |title: &str, counts: &[u64]| {
        let total = counts.iter().sum::<u64>().max(1) as f64;
        let points = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| Point { x: (h.edges[i] + h.edges[i + 1]) / 2.0, y: c as f64 / total, err: None })
            .collect();
        LinePanel { title: title.into(), series: vec![Series { label: title.into(), points }] }
    };
    vec![panel("within X", &h.x_self), panel("within Y", &h.y_self), panel("X with Y", &h.cross)]
}

pub fn render_histogram(h: &CorrelationHistograms, spec: &PlotSpec, path: &Path) -> Result<()> {
    spec.expect(PlotKind::Histogram)?;
    render_lines(&histogram_panels(h), spec, path)
}

const PLOT_W: f64 = 220.0;
const PLOT_H: f64 = 160.0;
const LEFT: f64 = 60.0;
const TOP: f64 = 24.0;
const PANEL_W: f64 = PLOT_W + LEFT + 16.0;
const PANEL_H: f64 = PLOT_H + TOP + 46.0;

/// Linear or log10 map from data to `[0, 1]`.
struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Scale {
    fn fit(values: impl Iterator<Item = f64>, log: bool, include_zero: bool) -> Option<Scale> {
        let vals: Vec<f64> = values.filter(|v| v.is_finite() && (!log || *v > 0.0)).map(|v| if log { v.log10() } else { v }).collect();
        let mut lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if vals.is_empty() {
            return None;
        }
        if include_zero && !log {
            lo = lo.min(0.0);
            hi = hi.max(0.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        } else {
            let pad = 0.05 * (hi - lo);
            hi += pad;
            if !(include_zero && lo == 0.0) {
                lo -= pad;
            }
        }
        Some(Scale { lo, hi, log })
    }

    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.max(f64::MIN_POSITIVE).log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self, hint: &[f64]) -> Vec<f64> {
        if !hint.is_empty() && hint.len() <= 10 {
            return hint.to_vec();
        }
        if self.log {
            let mut out: Vec<f64> = (self.lo.ceil() as i32..=self.hi.floor() as i32).map(|e| 10f64.powi(e)).collect();
            if out.len() < 2 {
                out = nice_ticks(10f64.powf(self.lo), 10f64.powf(self.hi));
            }
            return out;
        }
        nice_ticks(self.lo, self.hi)
    }
}

/// Multiples of a 1, 2, 2.5 or 5 step giving about five ticks in `[lo, hi]`.
fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 6.0;
    let exp = raw.log10().floor() as i32;
    let mag = 10f64.powi(exp);
    let mult = [1.0, 2.0, 2.5, 5.0, 10.0].into_iter().find(|m| m * mag >= raw).unwrap_or(10.0);
    let step = mult * mag;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    // Multiply in whole units then divide once so ticks land on exact decimals.
    let at = |i: i64| if exp < 0 { i as f64 * mult / 10f64.powi(-exp) } else { i as f64 * mult * mag };
    (first..=last).map(at).collect()
}

/// Draw panels of series on shared styling. A spec of kind `Histogram`
/// draws bars instead of lines.
pub fn render_lines(panels: &[LinePanel], spec: &PlotSpec, path: &Path) -> Result<()> {
    if panels.iter().all(|p| p.series.iter().all(|s| s.points.is_empty())) {
        return Err(PlotError::NothingToPlot);
    }
    if spec.log_x && panels.iter().flat_map(|p| &p.series).flat_map(|s| &s.points).any(|p| p.x <= 0.0) {
        return Err(PlotError::InvalidSpec("log x axis needs positive x values".into()));
    }
    let (rows, cols) = spec.grid_for(panels.len())?;
    let bars = spec.kind == PlotKind::Histogram;

    let mut labels: Vec<&str> = Vec::new();
    for s in panels.iter().flat_map(|p| &p.series) {
        if !labels.contains(&s.label.as_str()) {
            labels.push(&s.label);
        }
    }
    let legend = spec.kind == PlotKind::LineWithErrorbars;
    let head = if spec.title.is_empty() { 8.0 } else { 30.0 } + if legend { 20.0 } else { 0.0 };
    let width = 10.0 + cols as f64 * PANEL_W;
    let height = head + rows as f64 * PANEL_H + 6.0;
    let mut svg = Svg::new(width, height);
    if !spec.title.is_empty() {
        svg.text(width / 2.0, 20.0, "middle", "title", &spec.title);
    }
    if legend {
        let y = head - 12.0;
        let mut x = 10.0 + LEFT;
        for (i, l) in labels.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            svg.raw(&format!(
                r#"<g class="legend-entry"><line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#,
                num(x),
                num(y - 4.0),
                num(x + 18.0),
                num(y - 4.0),
                num(x + 22.0),
                num(y),
                super::svg::escape(l)
            ));
            x += 34.0 + 7.0 * l.chars().count() as f64;
        }
    }

    for (p, panel) in panels.iter().enumerate() {
        let (r, c) = (p / cols, p % cols);
        let ox = 10.0 + c as f64 * PANEL_W + LEFT;
        let oy = head + r as f64 * PANEL_H + TOP;
        svg.text(ox + PLOT_W / 2.0, oy - 8.0, "middle", "panel-title", &panel.title);
        svg.rect(ox, oy, PLOT_W, PLOT_H, r##"fill="none" stroke="#000000" stroke-width="0.8""##);
        let points = || panel.series.iter().flat_map(|s| &s.points);
        let (Some(sx), Some(sy)) = (
            Scale::fit(points().map(|p| p.x), spec.log_x, false),
            Scale::fit(
                points().flat_map(|p| {
                    let e = p.err.unwrap_or(0.0);
                    [p.y - e, p.y + e]
                }),
                spec.log_y,
                !spec.log_y,
            ),
        ) else {
            continue;
        };
        let px = |x: f64| ox + sx.unit(x) * PLOT_W;
        let py = |y: f64| oy + PLOT_H - sy.unit(y) * PLOT_H;

        let mut xs: Vec<f64> = points().map(|p| p.x).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        for t in sx.ticks(if bars { &[] } else { &xs }) {
            let x = px(t);
            svg.line(x, oy + PLOT_H, x, oy + PLOT_H + 4.0, r##"stroke="#000000""##);
            svg.text(x, oy + PLOT_H + 15.0, "middle", "tick", &label(t));
        }
        for t in sy.ticks(&[]) {
            let y = py(t);
            svg.line(ox - 4.0, y, ox, y, r##"stroke="#000000""##);
            svg.text(ox - 6.0, y + 4.0, "end", "tick", &label(t));
        }
        if !sy.log && sy.lo < 0.0 && sy.hi > 0.0 {
            svg.line(ox, py(0.0), ox + PLOT_W, py(0.0), r##"stroke="#b0b0b0" stroke-dasharray="3 3""##);
        }
        svg.text(ox + PLOT_W / 2.0, oy + PLOT_H + 32.0, "middle", "axis-label", &spec.x_label);
        svg.vtext(ox - 46.0, oy + PLOT_H / 2.0, "axis-label", &spec.y_label);

        for s in &panel.series {
            let idx = labels.iter().position(|l| *l == s.label).unwrap_or(0);
            let color = PALETTE[idx % PALETTE.len()];
            if bars {
                let bw = if s.points.len() > 1 { (px(s.points[1].x) - px(s.points[0].x)).abs() } else { PLOT_W / 10.0 };
                let base = py(sy.lo.max(0.0));
                for pt in &s.points {
                    let top = py(pt.y);
                    svg.rect(px(pt.x) - bw / 2.0, top, bw, (base - top).max(0.0), &format!(r#"class="bar" fill="{color}""#));
                }
                continue;
            }
            let coords: Vec<String> = s
                .points
                .iter()
                .filter(|pt| !spec.log_y || pt.y > 0.0)
                .map(|pt| format!("{},{}", num(px(pt.x)), num(py(pt.y))))
                .collect();
            svg.raw(&format!(
                r#"<polyline class="series" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                coords.join(" ")
            ));
            for pt in &s.points {
                if spec.log_y && pt.y <= 0.0 {
                    continue;
                }
                let (x, y) = (px(pt.x), py(pt.y));
                if let Some(e) = pt.err {
                    let y1 = if sy.log && pt.y - e <= 0.0 { oy + PLOT_H } else { py(pt.y - e) };
                    let y2 = py(pt.y + e);
                    svg.raw(&format!(
                        r#"<g class="errorbar" stroke="{color}"><line x1="{x}" y1="{a}" x2="{x}" y2="{b}"/><line x1="{l}" y1="{a}" x2="{r}" y2="{a}"/><line x1="{l}" y1="{b}" x2="{r}" y2="{b}"/></g>"#,
                        x = num(x),
                        a = num(y1),
                        b = num(y2),
                        l = num(x - 3.0),
                        r = num(x + 3.0)
                    ));
                }
                svg.raw(&format!(r#"<circle class="marker" cx="{}" cy="{}" r="2.5" fill="{color}"/>"#, num(x), num(y)));
            }
        }
    }
    write_svg(path, &svg.finish())
}

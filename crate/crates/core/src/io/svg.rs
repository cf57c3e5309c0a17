//! Standalone SVG heatmaps and line charts in a grey-scale palette.
//!
//! Output is a pure function of the input: coordinates are printed with a
//! fixed number of decimals and elements are emitted in input order.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Grid of final-tick values over local (x) and migrant (y) conservatism
/// levels.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_levels: Vec<f64>,
    pub y_levels: Vec<f64>,
    /// `values[y][x]`.
    pub values: Vec<Vec<f64>>,
    /// Colour-scale bounds, e.g. `(-1, 1)` for conservatism or `(0, 1)` for
    /// fractions.
    pub bounds: (f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub y_bounds: (f64, f64),
    pub series: Vec<Series>,
}

const CELL: f64 = 64.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_TOP: f64 = 50.0;
const LEGEND_WIDTH: f64 = 110.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Grey level for a normalized value: light for low, dark for high.
fn grey(t: f64) -> u8 {
    (235.0 - 200.0 * t.clamp(0.0, 1.0)).round() as u8
}

fn grey_hex(level: u8) -> String {
    format!("#{level:02x}{level:02x}{level:02x}")
}

pub fn heatmap_svg(spec: &HeatmapSpec) -> Result<String> {
    let (nx, ny) = (spec.x_levels.len(), spec.y_levels.len());
    if nx == 0 || ny == 0 {
        return Err(Error::Shape(
            "heatmap needs at least one level per axis".into(),
        ));
    }
    if spec.values.len() != ny || spec.values.iter().any(|r| r.len() != nx) {
        return Err(Error::Shape(format!(
            "heatmap values must form a {ny} x {nx} grid"
        )));
    }
    let (lo, hi) = spec.bounds;
    if lo.partial_cmp(&hi) != Some(Ordering::Less) {
        return Err(Error::Render(format!("empty colour scale [{lo}, {hi}]")));
    }
    for (yi, row) in spec.values.iter().enumerate() {
        for (xi, v) in row.iter().enumerate() {
            if !(lo..=hi).contains(v) {
                return Err(Error::Render(format!(
                    "cell (x = {}, y = {}) has value {v} outside the colour scale [{lo}, {hi}]",
                    spec.x_levels[xi], spec.y_levels[yi]
                )));
            }
        }
    }

    let plot_w = CELL * nx as f64;
    let plot_h = CELL * ny as f64;
    let width = MARGIN_LEFT + plot_w + LEGEND_WIDTH;
    let height = MARGIN_TOP + plot_h + 60.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(&spec.title)
    );

    // y levels ascend upwards
    for (yi, row) in spec.values.iter().enumerate() {
        let y = MARGIN_TOP + plot_h - CELL * (yi + 1) as f64;
        for (xi, v) in row.iter().enumerate() {
            let x = MARGIN_LEFT + CELL * xi as f64;
            let level = grey((v - lo) / (hi - lo));
            let ink = if level < 128 { "white" } else { "black" };
            let _ = writeln!(
                s,
                r#"<rect class="cell" x="{x:.1}" y="{y:.1}" width="{CELL:.1}" height="{CELL:.1}" fill="{}" stroke="white"/>"#,
                grey_hex(level)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" fill="{ink}">{:.2}</text>"#,
                x + CELL / 2.0,
                y + CELL / 2.0 + 4.0,
                v
            );
        }
    }
    for (xi, level) in spec.x_levels.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{level}</text>"#,
            MARGIN_LEFT + CELL * (xi as f64 + 0.5),
            MARGIN_TOP + plot_h + 18.0
        );
    }
    for (yi, level) in spec.y_levels.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{level}</text>"#,
            MARGIN_LEFT - 8.0,
            MARGIN_TOP + plot_h - CELL * (yi as f64 + 0.5) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        MARGIN_TOP + plot_h + 42.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(20 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        escape(&spec.y_label)
    );

    // legend: five swatches from high (top) to low
    let lx = MARGIN_LEFT + plot_w + 24.0;
    let steps = 5;
    for i in 0..steps {
        let t = 1.0 - i as f64 / (steps - 1) as f64;
        let v = lo + t * (hi - lo);
        let y = MARGIN_TOP + 22.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect class="legend" x="{lx:.1}" y="{y:.1}" width="18" height="18" fill="{}" stroke="black" stroke-width="0.5"/>"#,
            grey_hex(grey(t))
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{v:.2}</text>"#,
            lx + 24.0,
            y + 13.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

const CHART_W: f64 = 640.0;
const CHART_H: f64 = 320.0;
const DASHES: [&str; 6] = ["", "6 3", "2 2", "8 3 2 3", "12 4", "1 3"];
const STROKES: [u8; 4] = [0, 70, 130, 180];

pub fn lines_svg(chart: &LineChart) -> Result<String> {
    if chart.series.is_empty() {
        return Err(Error::Shape("line chart needs at least one series".into()));
    }
    let len = chart.series[0].values.len();
    if let Some(bad) = chart.series.iter().find(|s| s.values.len() != len) {
        return Err(Error::Shape(format!(
            "series `{}` has {} points, expected {len}",
            bad.name,
            bad.values.len()
        )));
    }
    if let Some(bad) = chart
        .series
        .iter()
        .find(|s| s.values.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::Render(format!(
            "series `{}` contains non-finite values",
            bad.name
        )));
    }
    let (lo, hi) = chart.y_bounds;
    if lo.partial_cmp(&hi) != Some(Ordering::Less) {
        return Err(Error::Render(format!("empty y range [{lo}, {hi}]")));
    }

    let width = MARGIN_LEFT + CHART_W + 180.0;
    let height = MARGIN_TOP + CHART_H + 60.0;
    let x_of = |i: usize| {
        let span = (len.max(2) - 1) as f64;
        MARGIN_LEFT + CHART_W * i as f64 / span
    };
    let y_of = |v: f64| MARGIN_TOP + CHART_H * (1.0 - (v - lo) / (hi - lo));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_LEFT + CHART_W / 2.0,
        escape(&chart.title)
    );
    let (x0, x1, y0, y1) = (
        MARGIN_LEFT,
        MARGIN_LEFT + CHART_W,
        MARGIN_TOP,
        MARGIN_TOP + CHART_H,
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0:.1}" y1="{y1:.1}" x2="{x1:.1}" y2="{y1:.1}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x0:.1}" y2="{y1:.1}" stroke="black"/>"#
    );
    for i in 0..=4 {
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{x0:.1}" y2="{y:.1}" stroke="black"/>"#,
            x0 - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"#,
            x0 - 8.0,
            y + 4.0
        );
    }
    let last = len.saturating_sub(1);
    for i in [0, last / 2, last] {
        let x = x_of(i);
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{i}</text>"#,
            y1 + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + CHART_W / 2.0,
        y1 + 42.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(20 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        MARGIN_TOP + CHART_H / 2.0,
        escape(&chart.y_label)
    );

    for (k, series) in chart.series.iter().enumerate() {
        let stroke = grey_hex(STROKES[k % STROKES.len()]);
        let dash = DASHES[k % DASHES.len()];
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(r#" stroke-dasharray="{dash}""#)
        };
        let mut d = String::new();
        for (i, v) in series.values.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.2},{:.2}",
                if i == 0 { "M" } else { " L" },
                x_of(i),
                y_of(*v)
            );
        }
        let _ = writeln!(
            s,
            r#"<path d="{d}" fill="none" stroke="{stroke}" stroke-width="1.5"{dash_attr}/>"#
        );
        let ly = MARGIN_TOP + 20.0 * k as f64 + 6.0;
        let lx = x1 + 20.0;
        let _ = writeln!(
            s,
            r#"<g class="legend-entry"><line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{stroke}" stroke-width="2"{dash_attr}/><text x="{:.1}" y="{:.1}">{}</text></g>"#,
            lx + 28.0,
            lx + 34.0,
            ly + 4.0,
            escape(&series.name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn write(path: &Path, svg: &str) -> Result<()> {
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

pub fn render_heatmap_svg(spec: &HeatmapSpec, path: &Path) -> Result<()> {
    write(path, &heatmap_svg(spec)?)
}

pub fn render_lines_svg(chart: &LineChart, path: &Path) -> Result<()> {
    write(path, &lines_svg(chart)?)
}

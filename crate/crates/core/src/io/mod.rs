//! File outputs: CSV tables and SVG figures.

pub mod csv;
pub mod svg;

pub use self::csv::{
    format_sig6, read_long_csv, read_timeseries_csv, write_long_csv, write_timeseries_csv,
};
pub use self::svg::{
    heatmap_svg, lines_svg, render_heatmap_svg, render_lines_svg, HeatmapSpec, LineChart, Series,
};

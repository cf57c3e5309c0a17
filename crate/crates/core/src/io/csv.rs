//! CSV outputs. Every file starts with a `# <schema> v<version>` comment
//! line followed by a fixed header; numbers carry six significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::field_names;
use crate::scalar::Scalar;
use crate::stats::DataTable;
use crate::sweep::{long_columns, ConditionResult, LongRecord};

pub const TIMESERIES_SCHEMA: &str = "# migragent-timeseries v1";
pub const LONG_SCHEMA: &str = "# migragent-long v1";

/// Leading columns of the time-series file; every observable follows as
/// `<field>` (replicate mean) and then every observable as `<field>_sd`.
pub const TIMESERIES_KEY_COLUMNS: [&str; 5] = [
    "condition",
    "conservatism_local",
    "conservatism_migrant",
    "speed_intake",
    "tick",
];

/// Renders `x` with six significant digits, trailing zeros trimmed.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&magnitude) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
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

pub fn timeseries_columns() -> Vec<String> {
    let mut cols: Vec<String> = TIMESERIES_KEY_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(field_names().iter().cloned());
    cols.extend(field_names().iter().map(|f| format!("{f}_sd")));
    cols
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_rows<I>(path: &Path, schema: &str, columns: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = create(path)?;
    writeln!(out, "{schema}").map_err(|e| Error::io(path, e))?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(columns).map_err(|e| Error::csv(path, e))?;
        for row in rows {
            w.write_record(&row).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// One row per condition x tick, sorted by condition index then tick.
pub fn write_timeseries_csv<S: Scalar>(result: &[ConditionResult<S>], path: &Path) -> Result<()> {
    let mut sorted: Vec<&ConditionResult<S>> = result.iter().collect();
    sorted.sort_by_key(|c| c.condition.index);
    let rows = sorted.into_iter().flat_map(|c| {
        c.mean
            .iter()
            .zip(&c.sd)
            .enumerate()
            .map(move |(tick, (mean, sd))| {
                let mut row = vec![
                    c.condition.index.to_string(),
                    format_sig6(c.condition.conservatism_local),
                    format_sig6(c.condition.conservatism_migrant),
                    c.condition.speed_intake.to_string(),
                    tick.to_string(),
                ];
                row.extend(mean.iter().chain(sd).map(|v| format_sig6(v.as_f64())));
                row
            })
    });
    write_rows(path, TIMESERIES_SCHEMA, &timeseries_columns(), rows)
}

pub fn write_long_csv<S: Scalar>(records: &[LongRecord<S>], path: &Path) -> Result<()> {
    let rows = records
        .iter()
        .map(|r| r.to_row().into_iter().map(format_sig6).collect());
    write_rows(path, LONG_SCHEMA, &long_columns(), rows)
}

/// Reads any of the numeric CSV outputs. Comment lines are skipped; a
/// missing schema line or a non-numeric cell is a schema error.
pub fn read_table_csv(path: &Path, schema: &str) -> Result<DataTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let first = text.lines().next().unwrap_or("");
    if first.trim() != schema {
        return Err(Error::Schema(format!(
            "{}: expected first line `{schema}`, found `{first}`",
            path.display()
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, v)| {
                v.parse::<f64>().map_err(|_| {
                    Error::Schema(format!(
                        "{}: row {} column `{}` is not numeric: `{v}`",
                        path.display(),
                        i + 1,
                        columns.get(c).map_or("?", String::as_str)
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    DataTable::new(columns, rows)
}

pub fn read_timeseries_csv(path: &Path) -> Result<DataTable> {
    read_table_csv(path, TIMESERIES_SCHEMA)
}

pub fn read_long_csv(path: &Path) -> Result<DataTable> {
    read_table_csv(path, LONG_SCHEMA)
}

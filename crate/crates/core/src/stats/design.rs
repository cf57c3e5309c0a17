use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::dynamics::Outcome;
use crate::error::{Error, Result};
use crate::metrics::Substratum;
use crate::scalar::Scalar;

use super::DataTable;

/// Predictor columns of the acculturation regressions, intercept first.
pub const PREDICTOR_NAMES: [&str; 4] = [
    "(Intercept)",
    "% conservative locals",
    "% conservative migrants",
    "Speed intake",
];

/// Regression design: `rows x columns` predictors (row-major) and a response.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix<S> {
    names: Vec<String>,
    x: Vec<S>,
    y: Vec<S>,
}

impl<S: Scalar> DesignMatrix<S> {
    pub fn new(names: Vec<String>, rows: Vec<Vec<S>>, y: Vec<S>) -> Result<Self> {
        if rows.len() != y.len() {
            return Err(Error::Shape(format!(
                "{} predictor rows but {} responses",
                rows.len(),
                y.len()
            )));
        }
        let p = names.len();
        let mut x = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != p {
                return Err(Error::Shape(format!(
                    "row {i} has {} predictors, expected {p}",
                    row.len()
                )));
            }
            x.extend(row);
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Domain("design contains non-finite values".into()));
        }
        Ok(DesignMatrix { names, x, y })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> usize {
        self.y.len()
    }

    pub fn cols(&self) -> usize {
        self.names.len()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> S {
        self.x[row * self.cols() + col]
    }

    pub fn column(&self, col: usize) -> Vec<S> {
        (0..self.rows()).map(|r| self.get(r, col)).collect()
    }

    pub fn response(&self) -> &[S] {
        &self.y
    }

    /// Copy with column `col` removed.
    pub fn without_column(&self, col: usize) -> DesignMatrix<S> {
        let names = self
            .names
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != col)
            .map(|(_, n)| n.clone())
            .collect();
        let rows = (0..self.rows())
            .map(|r| {
                (0..self.cols())
                    .filter(|&c| c != col)
                    .map(|c| self.get(r, c))
                    .collect()
            })
            .collect();
        DesignMatrix::new(names, rows, self.y.clone()).expect("subset of a valid design")
    }

    /// Copy with column `col` replaced by `f(value)`.
    pub fn map_column(&self, col: usize, f: impl Fn(S) -> S) -> DesignMatrix<S> {
        let mut out = self.clone();
        let p = self.cols();
        for r in 0..self.rows() {
            out.x[r * p + col] = f(out.x[r * p + col]);
        }
        out
    }
}

/// Observation unit of the regression rows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RowGranularity {
    /// One row per condition x replication x tick.
    #[default]
    Tick,
    /// Tick means per condition x replication.
    Replication,
    /// Tick and replication means per condition.
    Condition,
}

impl fmt::Display for RowGranularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowGranularity::Tick => "tick",
            RowGranularity::Replication => "replication",
            RowGranularity::Condition => "condition",
        })
    }
}

impl FromStr for RowGranularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tick" => Ok(RowGranularity::Tick),
            "replication" => Ok(RowGranularity::Replication),
            "condition" => Ok(RowGranularity::Condition),
            other => Err(Error::Config(format!(
                "row granularity must be tick, replication or condition, got `{other}`"
            ))),
        }
    }
}

/// Builds the design for one substratum's outcome fraction.
///
/// Predictors are the fractions of conservative locals and migrants plus a
/// 0/1 speed dummy (0 for the slowest speed present). Rows where the
/// substratum is empty carry no outcome and are skipped; coarser
/// granularities average over the remaining rows of each group.
pub fn build_design<S: Scalar>(
    table: &DataTable,
    substratum: Substratum,
    outcome: Outcome,
    granularity: RowGranularity,
) -> Result<DesignMatrix<S>> {
    let cons_local = table.column("pct_conservative_locals")?;
    let cons_migrant = table.column("pct_conservative_migrants")?;
    let speed = table.column("speed_intake")?;
    let count = table.column(&format!("{}_count", substratum.name()))?;
    let response = table.column(&format!("{}_{}", substratum.name(), outcome.name()))?;
    let group_cols = match granularity {
        RowGranularity::Tick => vec![],
        RowGranularity::Replication => {
            vec![table.column("condition")?, table.column("replication")?]
        }
        RowGranularity::Condition => vec![table.column("condition")?],
    };

    let mut levels: Vec<f64> = table.rows().iter().map(|r| r[speed]).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.len() > 2 {
        return Err(Error::Schema(format!(
            "speed_intake has {} levels; the speed factor supports at most two",
            levels.len()
        )));
    }
    let slow = levels.first().copied().unwrap_or(0.0);

    // group key -> (position, sums, n)
    let mut groups: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut sums: Vec<([f64; 4], usize)> = Vec::new();
    for (i, row) in table.rows().iter().enumerate() {
        if row[count] <= 0.0 {
            continue;
        }
        let values = [
            row[cons_local],
            row[cons_migrant],
            if row[speed] == slow { 0.0 } else { 1.0 },
            row[response],
        ];
        let key: Vec<u64> = if group_cols.is_empty() {
            vec![i as u64]
        } else {
            group_cols.iter().map(|&c| row[c].to_bits()).collect()
        };
        let slot = *groups.entry(key).or_insert_with(|| {
            sums.push(([0.0; 4], 0));
            sums.len() - 1
        });
        let (acc, n) = &mut sums[slot];
        for (a, v) in acc.iter_mut().zip(values) {
            *a += v;
        }
        *n += 1;
    }

    let mut rows = Vec::with_capacity(sums.len());
    let mut y = Vec::with_capacity(sums.len());
    for (acc, n) in sums {
        let m = acc.map(|v| v / n as f64);
        rows.push(vec![S::one(), S::lit(m[0]), S::lit(m[1]), S::lit(m[2])]);
        y.push(S::lit(m[3]));
    }
    DesignMatrix::new(
        PREDICTOR_NAMES.iter().map(|s| s.to_string()).collect(),
        rows,
        y,
    )
}

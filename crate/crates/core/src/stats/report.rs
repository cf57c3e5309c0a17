use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dynamics::Outcome;
use crate::error::{Error, Result};
use crate::metrics::Substratum;
use crate::scalar::Scalar;

use super::{build_design, effect_size_class, fit_ols, DataTable, RegressionFit, RowGranularity};

/// Regression of one substratum's outcome fraction. `fit` holds the error
/// text when the model could not be estimated (empty or degenerate data).
#[derive(Clone, Debug)]
pub struct ModelFit<S> {
    pub substratum: Substratum,
    pub outcome: Outcome,
    pub fit: std::result::Result<RegressionFit<S>, String>,
}

impl<S> ModelFit<S> {
    pub fn title(&self) -> String {
        let words = |s: &str| {
            s.split('_')
                .map(|w| {
                    let mut c = w.chars();
                    c.next()
                        .map_or(String::new(), |f| f.to_uppercase().chain(c).collect())
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!(
            "{} {}",
            words(self.outcome.name()),
            words(self.substratum.name())
        )
    }
}

/// Fits all sixteen substratum x outcome models. Schema errors abort;
/// estimation failures are kept per model.
pub fn fit_all<S: Scalar>(
    table: &DataTable,
    granularity: RowGranularity,
) -> Result<Vec<ModelFit<S>>> {
    let mut out = Vec::with_capacity(16);
    for substratum in Substratum::ALL {
        for outcome in Outcome::ALL {
            let design = build_design::<S>(table, substratum, outcome, granularity)?;
            let fit = fit_ols(&design).map_err(|e| e.to_string());
            out.push(ModelFit {
                substratum,
                outcome,
                fit,
            });
        }
    }
    Ok(out)
}

fn format_p(p: f64) -> String {
    if p.is_nan() {
        "NA".into()
    } else if p < 2e-16 {
        "<2e-16".into()
    } else {
        format!("{p:.3e}")
    }
}

fn stars(p: f64) -> &'static str {
    match p {
        p if p < 0.001 => "***",
        p if p < 0.01 => "**",
        p if p < 0.05 => "*",
        p if p < 0.1 => ".",
        _ => "",
    }
}

fn opt<S: Scalar>(v: Option<S>, decimals: usize) -> String {
    v.map_or("NA".into(), |v| format!("{:.*}", decimals, v.as_f64()))
}

/// Aligned plain-text table in the layout of a regression summary:
/// b, partial R2, r, sr2, Cohen f2 and p-value per predictor, intercept
/// last, then R2 and adjusted R2.
pub fn format_fit_text<S: Scalar>(model: &ModelFit<S>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", model.title());
    let fit = match &model.fit {
        Ok(fit) => fit,
        Err(e) => {
            let _ = writeln!(out, "  not estimable: {e}");
            return out;
        }
    };
    let mut rows: Vec<[String; 7]> = vec![[
        "Predictor".into(),
        "b".into(),
        "partial R2".into(),
        "r".into(),
        "sr2".into(),
        "Cohen f2".into(),
        "p-value".into(),
    ]];
    let (intercept, predictors): (Vec<_>, Vec<_>) =
        fit.coefficients.iter().partition(|c| c.r.is_none());
    for c in predictors.iter().chain(&intercept) {
        let (blank_if_intercept, p) = (c.r.is_none(), c.p_value);
        let cell = |s: String| if blank_if_intercept { String::new() } else { s };
        rows.push([
            c.name.clone(),
            format!("{:.3}", c.b.as_f64()),
            cell(opt(c.partial_r2, 3)),
            cell(opt(c.r, 2)),
            cell(opt(c.sr2, 2)),
            cell(opt(c.cohen_f2, 2)),
            format!("{} {}", format_p(p), stars(p))
                .trim_end()
                .to_string(),
        ]);
    }
    rows.push([
        "R2".into(),
        format!("{:.3}", fit.r2.as_f64()),
        "".into(),
        "".into(),
        "".into(),
        "".into(),
        "".into(),
    ]);
    rows.push([
        "Adj R2".into(),
        format!("{:.3}", fit.adj_r2.as_f64()),
        "".into(),
        "".into(),
        "".into(),
        "".into(),
        "".into(),
    ]);

    let widths: Vec<usize> = (0..7)
        .map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0))
        .collect();
    for row in &rows {
        let mut line = format!("  {:<w$}", row[0], w = widths[0]);
        for i in 1..7 {
            let _ = write!(line, "  {:>w$}", row[i], w = widths[i]);
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
    let _ = writeln!(out, "  n = {}", fit.n);
    out
}

pub fn write_fits_text<S: Scalar>(fits: &[ModelFit<S>], path: &Path) -> Result<()> {
    let mut out = String::from(
        "Multiple linear regression models\n\
         R2: multiple R2; Adj R2: adjusted R2; b: regression coefficient; r: correlation coefficient;\n\
         sr2: squared semi-partial correlation; Cohen f2: effect size\n\
         Signif. codes: 0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1\n\n",
    );
    for model in fits {
        out.push_str(&format_fit_text(model));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// One CSV row per model x predictor.
pub fn write_fits_csv<S: Scalar>(fits: &[ModelFit<S>], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header = [
        "substratum",
        "outcome",
        "predictor",
        "b",
        "std_error",
        "t_value",
        "p_value",
        "partial_r2",
        "r",
        "sr2",
        "cohen_f2",
        "effect_size",
        "r2",
        "adj_r2",
        "f_p_value",
        "n",
        "error",
    ];
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    let num = |v: Option<f64>| v.map_or(String::from("NA"), |v| format!("{v:.6e}"));
    for model in fits {
        let lead = [
            model.substratum.name().to_string(),
            model.outcome.name().to_string(),
        ];
        match &model.fit {
            Ok(fit) => {
                for c in &fit.coefficients {
                    let f2 = c.cohen_f2.map(|v| v.as_f64());
                    let record = [
                        lead[0].clone(),
                        lead[1].clone(),
                        c.name.clone(),
                        num(Some(c.b.as_f64())),
                        num(Some(c.std_error.as_f64())),
                        num(Some(c.t_value.as_f64())),
                        num(Some(c.p_value)),
                        num(c.partial_r2.map(|v| v.as_f64())),
                        num(c.r.map(|v| v.as_f64())),
                        num(c.sr2.map(|v| v.as_f64())),
                        num(f2),
                        f2.map_or("NA".into(), |f| effect_size_class(f).to_string()),
                        num(Some(fit.r2.as_f64())),
                        num(Some(fit.adj_r2.as_f64())),
                        num(Some(fit.f_p_value)),
                        fit.n.to_string(),
                        String::new(),
                    ];
                    w.write_record(&record).map_err(|e| Error::csv(path, e))?;
                }
            }
            Err(e) => {
                let mut record = vec![lead[0].clone(), lead[1].clone()];
                record.extend(std::iter::repeat_n(String::from("NA"), header.len() - 3));
                record.push(e.clone());
                w.write_record(&record).map_err(|e| Error::csv(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

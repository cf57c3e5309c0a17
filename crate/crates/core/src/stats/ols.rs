use std::cmp::Ordering;
use std::fmt;

use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::DesignMatrix;

/// Estimate and effect sizes of one design column.
///
/// The correlation-based fields are `None` for the intercept.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficient<S> {
    pub name: String,
    pub b: S,
    pub std_error: S,
    pub t_value: S,
    pub p_value: f64,
    /// Zero-order correlation with the response.
    pub r: Option<S>,
    pub partial_r2: Option<S>,
    /// Squared semi-partial correlation.
    pub sr2: Option<S>,
    /// `None` also when the model explains all variance.
    pub cohen_f2: Option<S>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionFit<S> {
    pub n: usize,
    pub coefficients: Vec<Coefficient<S>>,
    pub r2: S,
    pub adj_r2: S,
    pub f_statistic: S,
    pub f_p_value: f64,
    pub df_residual: usize,
    pub residual_sum_squares: S,
}

impl<S: Scalar> RegressionFit<S> {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient<S>> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn b(&self) -> Vec<S> {
        self.coefficients.iter().map(|c| c.b).collect()
    }
}

/// `sr2 / (1 - r2)`.
pub fn cohen_f2<S: Scalar>(sr2: S, r2: S) -> Result<S> {
    if r2.partial_cmp(&S::one()) != Some(Ordering::Less) || r2 < S::zero() {
        return Err(Error::Domain(format!(
            "Cohen's f2 needs 0 <= R2 < 1, got {r2}"
        )));
    }
    if sr2 < S::zero() {
        return Err(Error::Domain(format!(
            "sr2 must be non-negative, got {sr2}"
        )));
    }
    Ok(sr2 / (S::one() - r2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EffectSize {
    Negligible,
    Small,
    Medium,
    Large,
}

impl fmt::Display for EffectSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EffectSize::Negligible => "negligible",
            EffectSize::Small => "small",
            EffectSize::Medium => "medium",
            EffectSize::Large => "large",
        })
    }
}

/// Rule-of-thumb classes: small from 0.02, medium from 0.15, large from 0.35.
pub fn effect_size_class<S: Scalar>(f2: S) -> EffectSize {
    if f2 >= S::lit(0.35) {
        EffectSize::Large
    } else if f2 >= S::lit(0.15) {
        EffectSize::Medium
    } else if f2 >= S::lit(0.02) {
        EffectSize::Small
    } else {
        EffectSize::Negligible
    }
}

/// Householder QR of the design. `r` is the upper `p x p` factor
/// (row-major), `qty` the first `p` entries of `Q^T y`.
struct Qr<S> {
    r: Vec<S>,
    qty: Vec<S>,
    p: usize,
}

fn householder<S: Scalar>(design: &DesignMatrix<S>) -> Result<Qr<S>> {
    let n = design.rows();
    let p = design.cols();
    // column-major working copy
    let mut a: Vec<Vec<S>> = (0..p).map(|j| design.column(j)).collect();
    let mut qty = design.response().to_vec();
    let norms: Vec<S> = a
        .iter()
        .map(|c| c.iter().map(|v| *v * *v).sum::<S>().sqrt())
        .collect();
    let tol = S::epsilon() * S::from_count(n.max(p)) * S::lit(16.0);

    for j in 0..p {
        let norm = a[j][j..].iter().map(|v| *v * *v).sum::<S>().sqrt();
        if norm <= tol * norms[j] || norms[j] == S::zero() {
            return Err(singular(design, &a, j, tol));
        }
        let alpha = if a[j][j] > S::zero() { -norm } else { norm };
        let mut v: Vec<S> = a[j][j..].to_vec();
        v[0] = v[0] - alpha;
        let vv: S = v.iter().map(|x| *x * *x).sum();
        if vv > S::zero() {
            let two = S::lit(2.0);
            for col in a.iter_mut().skip(j + 1) {
                let dot: S = v.iter().zip(&col[j..]).map(|(x, y)| *x * *y).sum();
                let k = two * dot / vv;
                for (c, x) in col[j..].iter_mut().zip(&v) {
                    *c = *c - k * *x;
                }
            }
            let dot: S = v.iter().zip(&qty[j..]).map(|(x, y)| *x * *y).sum();
            let k = two * dot / vv;
            for (c, x) in qty[j..].iter_mut().zip(&v) {
                *c = *c - k * *x;
            }
        }
        a[j][j] = alpha;
        for v in a[j][j + 1..].iter_mut() {
            *v = S::zero();
        }
    }

    let mut r = vec![S::zero(); p * p];
    for (j, col) in a.iter().enumerate() {
        for i in 0..=j {
            r[i * p + j] = col[i];
        }
    }
    qty.truncate(p);
    Ok(Qr { r, qty, p })
}

/// Error for a column that adds no rank, naming the earlier columns it is a
/// combination of.
fn singular<S: Scalar>(design: &DesignMatrix<S>, a: &[Vec<S>], j: usize, tol: S) -> Error {
    let names = design.names();
    let column = names[j].clone();
    if a[j].iter().all(|v| *v == S::zero()) {
        return Error::Singular {
            column,
            detail: "is identically zero".into(),
        };
    }
    // solve R[..j, ..j] c = a[j][..j]
    let mut c = vec![S::zero(); j];
    for i in (0..j).rev() {
        let mut s = a[j][i];
        for k in i + 1..j {
            s = s - a[k][i] * c[k];
        }
        c[i] = s / a[i][i];
    }
    let partners: Vec<String> = c
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > tol.sqrt())
        .map(|(i, _)| format!("`{}`", names[i]))
        .collect();
    let detail = if partners.is_empty() {
        "is linearly dependent on earlier columns".to_string()
    } else {
        format!("is collinear with {}", partners.join(", "))
    };
    Error::Singular { column, detail }
}

/// Upper-triangular inverse, row-major.
fn invert_upper<S: Scalar>(r: &[S], p: usize) -> Vec<S> {
    let mut inv = vec![S::zero(); p * p];
    for col in 0..p {
        for i in (0..=col).rev() {
            let mut s = if i == col { S::one() } else { S::zero() };
            for k in i + 1..=col {
                s = s - r[i * p + k] * inv[k * p + col];
            }
            inv[i * p + col] = s / r[i * p + i];
        }
    }
    inv
}

fn correlation<S: Scalar>(x: &[S], y: &[S]) -> S {
    let n = S::from_count(x.len());
    let mx = x.iter().copied().sum::<S>() / n;
    let my = y.iter().copied().sum::<S>() / n;
    let (mut sxy, mut sxx, mut syy) = (S::zero(), S::zero(), S::zero());
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (*a - mx, *b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == S::zero() || syy == S::zero() {
        S::zero()
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

fn is_intercept<S: Scalar>(design: &DesignMatrix<S>, col: usize) -> bool {
    (0..design.rows()).all(|r| design.get(r, col) == S::one())
}

/// Least-squares fit through a Householder QR factorization.
///
/// A column of ones is treated as the intercept: R2 is then centered and
/// the intercept gets no correlation-based effect sizes. The unique
/// contribution of column j is `b_j^2 / [(X'X)^-1]_jj`, from which partial
/// R2, sr2 and f2 follow without refitting.
pub fn fit_ols<S: Scalar>(design: &DesignMatrix<S>) -> Result<RegressionFit<S>> {
    let n = design.rows();
    let p = design.cols();
    if p == 0 || n <= p {
        return Err(Error::Precondition(format!(
            "regression needs more rows than columns, got {n} rows and {p} columns"
        )));
    }
    let qr = householder(design)?;
    let rinv = invert_upper(&qr.r, qr.p);

    let mut b = vec![S::zero(); p];
    for i in 0..p {
        b[i] = (i..p).map(|k| rinv[i * p + k] * qr.qty[k]).sum();
    }

    let y = design.response();
    let mut sse = S::zero();
    for (r, yr) in y.iter().enumerate() {
        let fitted: S = (0..p).map(|c| design.get(r, c) * b[c]).sum();
        let e = *yr - fitted;
        sse = sse + e * e;
    }
    let intercept: Vec<bool> = (0..p).map(|c| is_intercept(design, c)).collect();
    let has_intercept = intercept.iter().any(|&i| i);
    let my = if has_intercept {
        y.iter().copied().sum::<S>() / S::from_count(n)
    } else {
        S::zero()
    };
    let sst: S = y.iter().map(|v| (*v - my) * (*v - my)).sum();
    let r2 = if sst > S::zero() {
        (S::one() - sse / sst).max(S::zero()).min(S::one())
    } else {
        S::one()
    };
    let df = n - p;
    let model_df = if has_intercept { p - 1 } else { p };
    let adj_r2 = S::one()
        - (S::one() - r2) * S::from_count(if has_intercept { n - 1 } else { n })
            / S::from_count(df);
    let sigma2 = sse / S::from_count(df);

    let t_dist = StudentsT::new(0.0, 1.0, df as f64).expect("positive degrees of freedom");
    let mut coefficients = Vec::with_capacity(p);
    for j in 0..p {
        let vjj: S = (0..p).map(|k| rinv[j * p + k] * rinv[j * p + k]).sum();
        let se = (sigma2 * vjj).sqrt();
        let t = b[j] / se;
        let p_value = if se == S::zero() {
            if b[j] == S::zero() {
                1.0
            } else {
                0.0
            }
        } else {
            (2.0 * t_dist.sf(t.as_f64().abs())).min(1.0)
        };
        let (r, partial_r2, sr2, f2) = if intercept[j] {
            (None, None, None, None)
        } else {
            let unique = b[j] * b[j] / vjj;
            let partial = if unique + sse > S::zero() {
                unique / (unique + sse)
            } else {
                S::zero()
            };
            let sr2 = if sst > S::zero() {
                unique / sst
            } else {
                S::zero()
            };
            let f2 = cohen_f2(sr2, r2).ok();
            (
                Some(correlation(&design.column(j), y)),
                Some(partial),
                Some(sr2),
                f2,
            )
        };
        coefficients.push(Coefficient {
            name: design.names()[j].clone(),
            b: b[j],
            std_error: se,
            t_value: t,
            p_value,
            r,
            partial_r2,
            sr2,
            cohen_f2: f2,
        });
    }

    let (f_statistic, f_p_value) = if model_df == 0 {
        (S::nan(), f64::NAN)
    } else if sse == S::zero() {
        (S::infinity(), 0.0)
    } else {
        let f = (r2 / S::from_count(model_df)) / ((S::one() - r2) / S::from_count(df));
        let dist =
            FisherSnedecor::new(model_df as f64, df as f64).expect("positive degrees of freedom");
        (f, dist.sf(f.as_f64()))
    };

    Ok(RegressionFit {
        n,
        coefficients,
        r2,
        adj_r2,
        f_statistic,
        f_p_value,
        df_residual: df,
        residual_sum_squares: sse,
    })
}

//! Multiple linear regression with effect sizes, fitted to long-format
//! sweep output.

mod design;
mod ols;
mod report;
mod table;

pub use design::{build_design, DesignMatrix, RowGranularity, PREDICTOR_NAMES};
pub use ols::{cohen_f2, effect_size_class, fit_ols, Coefficient, EffectSize, RegressionFit};
pub use report::{fit_all, format_fit_text, write_fits_csv, write_fits_text, ModelFit};
pub use table::DataTable;

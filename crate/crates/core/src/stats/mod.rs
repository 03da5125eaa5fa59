//! Scalar statistics: regression fits, edge measures, and multiplicity
//! correction. Everything here is pure given its inputs, so node models can
//! be evaluated in any order with bit-identical results.

pub mod dist;
mod linalg;
mod measures;
mod regression;

pub use measures::{
    delta_bic, fdr_adjust, pearson, residual_correlation, vif, DeltaBic, ResidualCorrelation,
};
pub use regression::{fit_logit, fit_ols, ModelKind, RegressionFit};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatError {
    #[error("design has {rows} rows for {params} parameters; need rows > params")]
    TooFewRows { rows: usize, params: usize },
    #[error("rank-deficient design; dependent design columns {columns:?} (0 = intercept)")]
    RankDeficient { columns: Vec<usize> },
    #[error("logistic response must be coded 0/1")]
    NotBinary,
    #[error("logistic response has a single class")]
    SingleClass,
    #[error("p-value {value} outside [0, 1]")]
    PValueOutOfRange { value: f64 },
}

use thiserror::Error;

use crate::lp::LpStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input failed validation; `field` names the offending input.
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("product grid has {types} types, above the limit of {limit}")]
    GridTooLarge { types: usize, limit: usize },

    #[error("numerical breakdown: pivot {value:e} at row {row}, column {col}")]
    DegeneratePivot { row: usize, col: usize, value: f64 },

    #[error("linear program did not reach an optimum (status: {0:?})")]
    NotOptimal(LpStatus),

    #[error("guarantee factor undefined for alpha = {0} (need alpha >= 1)")]
    Domain(f64),

    #[error("failed to write output: {0}")]
    Output(String),

    /// The second item has zero separate-sale revenue, so the ratio alpha is undefined.
    #[error("degenerate instance: item revenue r2 = 0")]
    DegenerateInstance,
}

impl Error {
    pub(crate) fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }
}

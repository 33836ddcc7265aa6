use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// Point outside the closed unit disc, zero start vector, invalid parameter.
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation at an atom of a singular inner factor.
    #[error("undefined boundary value at angle {angle}")]
    UndefinedBoundaryValue { angle: f64 },

    /// An iterative or quadrature routine could not meet its tolerance.
    #[error("precision error: {what} (achieved {achieved:e}, wanted {wanted:e})")]
    Precision {
        what: String,
        achieved: f64,
        wanted: f64,
    },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("nonvanishing at root: |h(e^(i theta))| = {residual:e} exceeds {tolerance:e}")]
    NonvanishingAtRoot { residual: f64, tolerance: f64 },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("schema error: {0}")]
    Schema(String),
}

impl LabError {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        LabError::Dimension(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        LabError::Domain(msg.into())
    }
}

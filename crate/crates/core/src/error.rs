//! Error types shared across the crate.
//!
//! Magnitudes carried inside errors are stored as `f64` regardless of the
//! scalar type the computation ran in, so the error types stay non-generic.

use thiserror::Error;

/// Failures of the dense solver and the adaptive quadrature.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },
    #[error("matrix singular to working precision at elimination step {step} (pivot magnitude {pivot:e})")]
    Singular { step: usize, pivot: f64 },
    #[error("quadrature did not converge after {panels} panels: estimate {estimate:e}, error bound {error_bound:e}")]
    NoConvergence {
        estimate: f64,
        error_bound: f64,
        panels: usize,
    },
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
}

/// An input failed a precondition.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid {field}: {reason}")]
pub struct ValidationError {
    pub field: String,
    pub reason: String,
}

impl ValidationError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Curve evaluation failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("non-positive discount factor {price:e} at term {term}")]
    NonPositivePrice { term: f64, price: f64 },
    #[error("term {term} outside the evaluation domain: {reason}")]
    Domain { term: f64, reason: &'static str },
    #[error("unsupported for this curve: {0}")]
    Unsupported(&'static str),
}

/// Failures of the fitting routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("exact instruments are linearly dependent: {}", ids.join(", "))]
    RedundantExact { ids: Vec<String> },
    #[error("unsupported combination: {0}")]
    Unsupported(String),
}

impl FitError {
    /// True for failures of the linear algebra rather than of the inputs.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, FitError::Numerics(_) | FitError::RedundantExact { .. })
    }
}

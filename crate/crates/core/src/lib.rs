//! Smith-Wilson yield curves.
//!
//! Three ways to build a discount curve from market instruments:
//!
//! * the classic Smith-Wilson interpolation, which reprices every instrument
//!   exactly and extrapolates towards an ultimate forward rate (UFR),
//! * a weighted fit that penalizes, rather than pins, the prices of partially
//!   liquid instruments ([`fit::fit_weighted`]),
//! * a finite-convergence kernel whose forward rate reaches the UFR exactly,
//!   with zero slope, at a prescribed term `T2` ([`finite::fit_finite_convergence`]).
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below pin the usual double-precision instantiations.

// `!(a < b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod error;
pub mod finite;
pub mod fit;
pub mod kernel;
pub mod liquidity;
pub mod marketio;
pub mod numerics;
mod scalar;

pub use curve::{CashflowSchedule, CurveConfig, FitMode, FittedCurve, Instrument, KernelKind};
pub use error::{CurveError, FitError, NumericsError, ValidationError};
pub use finite::KernelCoeffs;
pub use fit::{DesignMatrices, FitDiagnostics};
pub use kernel::{EnergyMatrix, KernelParams};
pub use numerics::{DenseMatrix, QuadratureSpec};
pub use scalar::Scalar;

/// Double-precision curve configuration.
pub type CurveConfig64 = CurveConfig<f64>;
/// Double-precision fitted curve.
pub type FittedCurve64 = FittedCurve<f64>;
/// Double-precision instrument.
pub type Instrument64 = Instrument<f64>;
/// Double-precision dense matrix.
pub type DenseMatrix64 = DenseMatrix<f64>;
/// Double-precision kernel parameters.
pub type KernelParams64 = KernelParams<f64>;
/// Double-precision finite-convergence kernel coefficients.
pub type KernelCoeffs64 = KernelCoeffs<f64>;
/// Double-precision fit diagnostics.
pub type FitDiagnostics64 = FitDiagnostics<f64>;

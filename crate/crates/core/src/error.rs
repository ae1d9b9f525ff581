use thiserror::Error;

use crate::realization::Form;

/// Errors raised while designing, realizing or analysing an observer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("roots are not closed under conjugation (imaginary residual {residual:e} in coefficient {index})")]
    NonRealCoefficients { index: usize, residual: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular (pivot {pivot:e} in column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("order {order} is outside 1..={cap}")]
    OrderOutOfRange { order: usize, cap: usize },

    #[error("sampling period must be positive and finite, got {0}")]
    NonPositiveSamplingPeriod(f64),

    #[error("derivative index {index} is out of range for order {order}")]
    DerivativeIndexOutOfRange { index: usize, order: usize },

    #[error("polynomial is not monic (leading coefficient {0})")]
    NotMonic(f64),

    #[error("pair is not observable")]
    Unobservable,

    #[error("pair is not controllable")]
    Uncontrollable,

    #[error("pole {re}{im:+}i lies on or outside the unit circle")]
    UnstablePoles { re: f64, im: f64 },

    #[error("closed-form gains exist only for orders 2 and 3, got {0}")]
    UnsupportedOrder(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state is tagged {state:?} but the model is {model:?}")]
    FormMismatch { model: Form, state: Form },

    #[error("denominator is not normalized (a[0] = {0})")]
    NotNormalized(f64),

    #[error("filter response does not converge")]
    NonConvergent,

    #[error("pole on the unit circle at omega = {0}")]
    PoleOnUnitCircle(f64),

    #[error("pole at z = 1")]
    PoleAtOne,

    #[error("closed-loop poles missed their targets (residual {0:e})")]
    PolePlacement(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

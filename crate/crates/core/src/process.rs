//! Discrete-time model of a K-fold integrator sampled every `Ts` seconds.

use crate::error::{Error, Result};
use crate::math::{Complex, Matrix, Polynomial};

/// Largest order accepted by [`ProcessModel::new`].
pub const DEFAULT_ORDER_CAP: usize = 8;

/// Integrator-chain process in kinematic coordinates: state element `k` is
/// the `k`-th time derivative of position.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessModel {
    order: usize,
    ts: f64,
    transition: Matrix,
    measurement: Matrix,
    char_poly: Polynomial,
}

impl ProcessModel {
    pub fn new(order: usize, ts: f64) -> Result<Self> {
        Self::with_order_cap(order, ts, DEFAULT_ORDER_CAP)
    }

    pub fn with_order_cap(order: usize, ts: f64, cap: usize) -> Result<Self> {
        if order == 0 || order > cap {
            return Err(Error::OrderOutOfRange { order, cap });
        }
        if !(ts > 0.0 && ts.is_finite()) {
            return Err(Error::NonPositiveSamplingPeriod(ts));
        }
        let mut measurement = Matrix::zeros(1, order);
        measurement[(0, 0)] = 1.0;
        let char_poly = Polynomial::from_roots(&vec![Complex::new(1.0, 0.0); order])?;
        Ok(Self {
            order,
            ts,
            transition: toeplitz_transition(order, ts),
            measurement,
            char_poly,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    /// One-sample state transition `G`.
    pub fn transition_matrix(&self) -> &Matrix {
        &self.transition
    }

    /// Measurement row `C = [1, 0, ..., 0]`.
    pub fn measurement_row(&self) -> &Matrix {
        &self.measurement
    }

    /// `(z - 1)^K`.
    pub fn char_poly(&self) -> &Polynomial {
        &self.char_poly
    }

    /// State transition over `t` seconds, for any real `t`.
    ///
    /// With `t = -q Ts` and integer `q` this equals `G^(-q)`.
    pub fn transition(&self, t: f64) -> Matrix {
        toeplitz_transition(self.order, t)
    }

    /// One-step predictor row `C G`.
    pub fn predictor_row(&self) -> Matrix {
        Matrix::row(self.transition.row_slice(0))
    }

    /// Output row selecting derivative `deriv` of the state `lag` samples in
    /// the past (negative lag predicts).
    pub fn output_row(&self, lag: f64, deriv: usize) -> Result<Matrix> {
        if deriv >= self.order {
            return Err(Error::DerivativeIndexOutOfRange {
                index: deriv,
                order: self.order,
            });
        }
        let shift = self.transition(-lag * self.ts);
        Ok(Matrix::row(shift.row_slice(deriv)))
    }
}

/// Upper-triangular Toeplitz matrix with `t^k / k!` on the `k`-th
/// superdiagonal.
fn toeplitz_transition(order: usize, t: f64) -> Matrix {
    let mut diag = Vec::with_capacity(order);
    let mut term = 1.0;
    for k in 0..order {
        if k > 0 {
            term *= t / k as f64;
        }
        diag.push(term);
    }
    let mut g = Matrix::zeros(order, order);
    for i in 0..order {
        for j in i..order {
            g[(i, j)] = diag[j - i];
        }
    }
    g
}

//! Transfer-function analysis: direct-form filtering, impulse, step and
//! frequency responses, white-noise gain and near-dc flatness.
//!
//! Polynomials are read in causal form, `b[k]` multiplying `z^(-k)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::{Complex, Matrix, Polynomial};
use crate::pole_place::DesignResult;

/// Hard cap on the length of a truncated impulse response.
pub const MAX_IMPULSE_SAMPLES: usize = 1_000_000;

/// Number of points in [`frequency_table`].
pub const FREQUENCY_GRID_POINTS: usize = 1024;

/// `H(z) = B(z) / A(z)` with `a[0] = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferFunction {
    pub b: Polynomial,
    pub a: Polynomial,
}

impl TransferFunction {
    pub fn new(b: Polynomial, a: Polynomial) -> Result<Self> {
        match a.coeffs().first() {
            Some(&a0) if (a0 - 1.0).abs() <= 1e-12 => Ok(Self { b, a }),
            Some(&a0) => Err(Error::NotNormalized(a0)),
            None => Err(Error::NotNormalized(0.0)),
        }
    }

    pub fn from_coeffs(b: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        Self::new(Polynomial::new(b), Polynomial::new(a))
    }
}

/// Past samples for [`lde_filter`], most recent first: `inputs[0]` is
/// `x[-1]`, `outputs[0]` is `y[-1]`. Missing values are zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Prehistory {
    pub inputs: Vec<f64>,
    pub outputs: Vec<f64>,
}

/// Direct-form recursion
/// `y[n] = sum b[k] x[n-k] - sum_{k>=1} a[k] y[n-k]`.
pub fn lde_filter(tf: &TransferFunction, x: &[f64], prehistory: Option<&Prehistory>) -> Vec<f64> {
    let b = tf.b.coeffs();
    let a = tf.a.coeffs();
    let empty = Prehistory::default();
    let pre = prehistory.unwrap_or(&empty);
    let past = |seq: &[f64], hist: &[f64], n: usize, k: usize| -> f64 {
        if k <= n {
            seq[n - k]
        } else {
            hist.get(k - n - 1).copied().unwrap_or(0.0)
        }
    };
    let mut y = Vec::with_capacity(x.len());
    for n in 0..x.len() {
        let mut acc = 0.0;
        for (k, &bk) in b.iter().enumerate() {
            acc += bk * past(x, &pre.inputs, n, k);
        }
        for (k, &ak) in a.iter().enumerate().skip(1) {
            acc -= ak * past(&y, &pre.outputs, n, k);
        }
        y.push(acc);
    }
    y
}

/// Schur-Cohn step-down test: true when every root of the denominator lies
/// strictly inside the unit circle.
pub fn is_stable(a: &Polynomial) -> bool {
    let mut c: Vec<f64> = a.coeffs().to_vec();
    if c.is_empty() || c[0] == 0.0 {
        return false;
    }
    let lead = c[0];
    c.iter_mut().for_each(|v| *v /= lead);
    while c.len() > 1 {
        let m = c.len() - 1;
        let k = c[m];
        if !(k.abs() < 1.0 - 1e-12) {
            return false;
        }
        let scale = 1.0 - k * k;
        c = (0..m).map(|i| (c[i] - k * c[m - i]) / scale).collect();
    }
    true
}

/// Companion matrix for the homogeneous recursion of `a`, acting on
/// `[h[n], h[n-1], ..]`.
fn recursion_matrix(a: &[f64]) -> Matrix {
    let n = a.len() - 1;
    let mut f = Matrix::zeros(n, n);
    for j in 0..n {
        f[(0, j)] = -a[j + 1];
    }
    for i in 1..n {
        f[(i, i - 1)] = 1.0;
    }
    f
}

/// `P = e0 e0^T + F^T P F` by doubling.
fn output_gramian(f: &Matrix) -> Result<Matrix> {
    let n = f.rows();
    let mut p = Matrix::zeros(n, n);
    p[(0, 0)] = 1.0;
    let mut g = f.clone();
    for _ in 0..64 {
        let update = g.transpose().mul(&p)?.mul(&g)?;
        p = p.add(&update)?;
        g = g.mul(&g)?;
        if !p.max_abs().is_finite() {
            return Err(Error::NonConvergent);
        }
        if update.max_abs() <= f64::EPSILON * p.max_abs() && g.max_abs() < 1e-3 {
            return Ok(p);
        }
    }
    Err(Error::NonConvergent)
}

fn quad_form(p: &Matrix, s: &[f64]) -> f64 {
    let n = s.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += s[i] * p[(i, j)] * s[j];
        }
    }
    acc
}

/// Impulse response truncated once the remaining energy `sum_{m>n} h[m]^2`
/// falls below `tol`. The remaining energy is evaluated exactly from the
/// recursion state and the output Gramian.
pub fn impulse_response(tf: &TransferFunction, tol: f64) -> Result<Vec<f64>> {
    if !is_stable(&tf.a) {
        return Err(Error::NonConvergent);
    }
    let a = tf.a.coeffs();
    let b = tf.b.coeffs();
    let order = a.len() - 1;
    let gramian = if order > 0 {
        Some(output_gramian(&recursion_matrix(a))?)
    } else {
        None
    };
    let settled = b.len().saturating_sub(1).max(order.saturating_sub(1));
    let mut h: Vec<f64> = Vec::new();
    let mut state = vec![0.0; order];
    for n in 0..MAX_IMPULSE_SAMPLES {
        let mut v = b.get(n).copied().unwrap_or(0.0);
        for (k, &ak) in a.iter().enumerate().skip(1) {
            if k <= n {
                v -= ak * h[n - k];
            }
        }
        h.push(v);
        if order > 0 {
            state.rotate_right(1);
            state[0] = v;
        }
        if n >= settled {
            let tail = match &gramian {
                Some(p) => quad_form(p, &state) - v * v,
                None => 0.0,
            };
            if tail < tol {
                return Ok(h);
            }
        }
    }
    Err(Error::NonConvergent)
}

/// `H(e^{i omega})`.
pub fn frequency_response(tf: &TransferFunction, omega: f64) -> Result<Complex> {
    let z_inv = Complex::from_polar(1.0, -omega);
    let den = tf.a.eval_causal(z_inv);
    if den.norm() < 1e-12 {
        return Err(Error::PoleOnUnitCircle(omega));
    }
    Ok(tf.b.eval_causal(z_inv) / den)
}

/// A sample of the frequency response.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyPoint {
    /// Radians per sample.
    pub omega: f64,
    pub value: Complex,
}

impl FrequencyPoint {
    /// Cycles per sample.
    pub fn frequency(&self) -> f64 {
        self.omega / (2.0 * PI)
    }

    pub fn magnitude_db(&self) -> f64 {
        20.0 * self.value.norm().log10()
    }

    pub fn phase_deg(&self) -> f64 {
        self.value.arg().to_degrees()
    }
}

/// Response on `FREQUENCY_GRID_POINTS` uniform frequencies from 0 to 0.5
/// cycles per sample inclusive.
pub fn frequency_table(tf: &TransferFunction) -> Result<Vec<FrequencyPoint>> {
    let last = (FREQUENCY_GRID_POINTS - 1) as f64;
    (0..FREQUENCY_GRID_POINTS)
        .map(|i| {
            let omega = 2.0 * PI * 0.5 * i as f64 / last;
            Ok(FrequencyPoint {
                omega,
                value: frequency_response(tf, omega)?,
            })
        })
        .collect()
}

/// White-noise gain `sum h[n]^2`, truncated below `1e-14`.
pub fn wng_numeric(tf: &TransferFunction) -> Result<f64> {
    Ok(impulse_response(tf, 1e-14)?.iter().map(|h| h * h).sum())
}

/// White-noise gain of the second-order repeated-pole smoother.
pub fn wng_closed_k2(p: f64, q: f64) -> f64 {
    let d = p + p * q - q;
    let s = 1.0 + p;
    (1.0 - p) * (1.0 / s + 2.0 * d / (s * s) + 2.0 * d * d / (s * s * s))
}

/// Lag minimizing [`wng_closed_k2`] for pole `p`.
pub fn optimal_lag_k2(p: f64) -> f64 {
    0.5 * (1.0 + 3.0 * p) / (1.0 - p)
}

/// Final value of the unit-step response, `H(1)`.
pub fn steady_state_step(tf: &TransferFunction) -> Result<f64> {
    let den = tf.a.sum();
    if den.abs() < 1e-12 {
        return Err(Error::PoleAtOne);
    }
    Ok(tf.b.sum() / den)
}

/// Lag-adjusted error `x[n - q] - y[n]` at `n = horizon` for the ramp
/// `x[n] = n Ts` run through the filter from rest.
pub fn ramp_error_empirical(tf: &TransferFunction, q: f64, ts: f64, horizon: usize) -> f64 {
    let x: Vec<f64> = (0..=horizon).map(|n| n as f64 * ts).collect();
    let y = lde_filter(tf, &x, None);
    (horizon as f64 - q) * ts - y[horizon]
}

/// Derivatives of the ideal delayed `k_t`-th differentiator
/// `(i omega / Ts)^k_t e^{-i q omega}` at dc, orders `0..count`.
pub fn flatness_targets(k_t: usize, q: f64, ts: f64, count: usize) -> Vec<Complex> {
    let i = Complex::new(0.0, 1.0);
    (0..count)
        .map(|k| {
            if k < k_t {
                return Complex::new(0.0, 0.0);
            }
            let falling: f64 = ((k - k_t + 1)..=k).map(|v| v as f64).product();
            i.powu(k as u32) * (-q).powi((k - k_t) as i32) * ts.powi(-(k_t as i32)) * falling
        })
        .collect()
}

/// Distance in the complex `omega` plane from dc to the nearest singularity
/// of `H`, i.e. `min |log lambda|` over the nonzero poles.
fn analytic_radius(a: &Polynomial) -> Result<f64> {
    let coeffs = a.coeffs();
    let order = coeffs.len() - 1;
    if order == 0 {
        return Ok(f64::INFINITY);
    }
    let mut f = Matrix::zeros(order, order);
    for j in 0..order {
        f[(0, j)] = -coeffs[j + 1];
    }
    for i in 1..order {
        f[(i, i - 1)] = 1.0;
    }
    let mut radius = f64::INFINITY;
    for root in eigenvalues(&f)? {
        if root.norm() > 1e-300 {
            radius = radius.min(root.ln().norm());
        }
    }
    Ok(radius)
}

/// Roots of the characteristic polynomial of a small matrix by Durand-Kerner
/// iteration; accuracy only needs to be good enough to pick a contour radius.
fn eigenvalues(m: &Matrix) -> Result<Vec<Complex>> {
    let poly = crate::math::char_poly(m)?;
    let c = poly.coeffs();
    let n = c.len() - 1;
    let bound = 1.0 + c.iter().skip(1).fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let seed = Complex::new(0.4, 0.9);
    let mut roots: Vec<Complex> = (0..n).map(|k| seed.powu(k as u32) * bound).collect();
    for _ in 0..500 {
        let mut moved = 0.0_f64;
        for i in 0..n {
            let mut den = Complex::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= roots[i] - roots[j];
                }
            }
            if den.norm() == 0.0 {
                den = Complex::new(1e-12, 0.0);
            }
            let step = poly.eval(roots[i]) / den;
            roots[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-14 {
            break;
        }
    }
    Ok(roots)
}

/// Frequency derivatives `d^k H / d omega^k` at dc for `k = 0..count`.
///
/// `H` is analytic in `omega` around dc, so the derivatives are taken from
/// the Cauchy integral on a circle in the complex `omega` plane, sampled by
/// the trapezoidal rule. The circle radius is half the distance to the
/// nearest singularity.
pub fn dc_derivatives(tf: &TransferFunction, count: usize) -> Result<Vec<Complex>> {
    let radius = (0.5 * analytic_radius(&tf.a)?).min(1.0);
    let points = 128;
    let eval = |omega: Complex| -> Result<Complex> {
        let z_inv = (-Complex::new(0.0, 1.0) * omega).exp();
        let den = tf.a.eval_causal(z_inv);
        if den.norm() < 1e-300 {
            return Err(Error::NonConvergent);
        }
        Ok(tf.b.eval_causal(z_inv) / den)
    };
    let samples: Vec<(Complex, Complex)> = (0..points)
        .map(|j| {
            let unit = Complex::from_polar(1.0, 2.0 * PI * j as f64 / points as f64);
            Ok((unit, eval(unit * radius)?))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(count);
    let mut factorial = 1.0;
    for k in 0..count {
        if k > 0 {
            factorial *= k as f64;
        }
        let acc: Complex = samples
            .iter()
            .map(|(unit, value)| value * unit.powi(-(k as i32)))
            .sum();
        out.push(acc / points as f64 * factorial / radius.powi(k as i32));
    }
    Ok(out)
}

/// Largest deviation of the first `orders` dc derivatives of `H` from those
/// of the ideal delayed differentiator.
pub fn flatness_check(
    tf: &TransferFunction,
    k_t: usize,
    q: f64,
    ts: f64,
    orders: usize,
) -> Result<f64> {
    let measured = dc_derivatives(tf, orders)?;
    let targets = flatness_targets(k_t, q, ts, orders);
    Ok(measured
        .iter()
        .zip(&targets)
        .fold(0.0, |m, (a, b)| m.max((a - b).norm())))
}

/// Output for a unit step, `n = 0..=n_max`, with the filter initialized on
/// the first sample. A matched observer starts in equilibrium, so the output
/// is 1 throughout whatever the lag.
pub fn step_response_table(design: &DesignResult, n_max: usize) -> Result<Vec<f64>> {
    step_response_scaled(design, n_max, 1.0)
}

/// As [`step_response_table`] for a step of amplitude `amplitude`.
pub fn step_response_scaled(design: &DesignResult, n_max: usize, amplitude: f64) -> Result<Vec<f64>> {
    let ss = &design.kin;
    let mut state = ss.initial_state(amplitude);
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(ss.output(&state)?);
    for _ in 0..n_max {
        out.push(ss.step(&mut state, amplitude)?);
    }
    Ok(out)
}

/// Unit-step response of the difference equation started from rest,
/// `n = 0..=n_max`.
pub fn step_response_from_rest(tf: &TransferFunction, n_max: usize) -> Vec<f64> {
    lde_filter(tf, &vec![1.0; n_max + 1], None)
}

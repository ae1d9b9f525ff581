//! Independent reference computations shared by the integration tests.
//!
//! None of these go through the library's pole-placement, realization or
//! analysis code paths; they only borrow the `Matrix` container.

#![allow(dead_code)]

use observer_core::pole_place::{design, ObserverSpec};
use observer_core::{Complex, DesignResult, Matrix, ProcessModel, TransferFunction};

pub fn repeated(order: usize, ts: f64, p: f64, lag: f64, deriv: usize) -> DesignResult {
    let process = ProcessModel::new(order, ts).unwrap();
    design(&ObserverSpec::repeated(process, p, lag, deriv).unwrap()).unwrap()
}

pub fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Integrator transition with `t^k / k!` on the `k`-th superdiagonal, built
/// from the matrix exponential series of the shift matrix.
pub fn integrator(order: usize, t: f64) -> Matrix {
    let mut out = Matrix::identity(order);
    let mut term = Matrix::identity(order);
    let mut shift = Matrix::zeros(order, order);
    for i in 0..order.saturating_sub(1) {
        shift[(i, i + 1)] = t;
    }
    for k in 1..order {
        term = term.mul(&shift).unwrap().scale(1.0 / k as f64);
        out = out.add(&term).unwrap();
    }
    out
}

/// Monic polynomial with the given roots, expanded by repeated convolution.
pub fn poly_from_roots(roots: &[Complex]) -> Vec<f64> {
    let mut c = vec![Complex::new(1.0, 0.0)];
    for r in roots {
        let mut next = c.clone();
        next.push(Complex::new(0.0, 0.0));
        for k in 0..c.len() {
            next[k + 1] -= r * c[k];
        }
        c = next;
    }
    c.iter().map(|v| v.re).collect()
}

/// Ackermann's formula for the observer gain placing the eigenvalues of
/// `G - K c` at the roots of `phi`: `K = phi(G) O^-1 e_last`.
pub fn ackermann_gain(g: &Matrix, c: &Matrix, phi: &[f64]) -> Vec<f64> {
    let n = g.rows();
    let mut obs = Matrix::zeros(n, n);
    let mut row = c.clone();
    for i in 0..n {
        for j in 0..n {
            obs[(i, j)] = row[(0, j)];
        }
        row = row.mul(g).unwrap();
    }
    let mut phi_g = Matrix::zeros(n, n);
    for &coef in phi {
        phi_g = phi_g.mul(g).unwrap().add(&Matrix::identity(n).scale(coef)).unwrap();
    }
    let mut e = vec![0.0; n];
    e[n - 1] = 1.0;
    let x = obs.inverse().unwrap().mul_vec(&e).unwrap();
    phi_g.mul_vec(&x).unwrap()
}

/// Impulse response by running the difference equation for `len` samples.
pub fn brute_impulse(tf: &TransferFunction, len: usize) -> Vec<f64> {
    let b = tf.b.coeffs();
    let a = tf.a.coeffs();
    let mut h = vec![0.0; len];
    for n in 0..len {
        let mut v = if n < b.len() { b[n] } else { 0.0 };
        for k in 1..a.len().min(n + 1) {
            v -= a[k] * h[n - k];
        }
        h[n] = v;
    }
    h
}

pub fn brute_wng(tf: &TransferFunction, len: usize) -> f64 {
    brute_impulse(tf, len).iter().map(|v| v * v).sum()
}

/// `d^k H / d omega^k` at dc from impulse-response moments,
/// `(-i)^k sum n^k h[n]`.
pub fn moment_derivatives(tf: &TransferFunction, count: usize, len: usize) -> Vec<Complex> {
    let h = brute_impulse(tf, len);
    (0..count)
        .map(|k| {
            let m: f64 = h
                .iter()
                .enumerate()
                .map(|(n, v)| (n as f64).powi(k as i32) * v)
                .sum();
            Complex::new(0.0, -1.0).powu(k as u32) * m
        })
        .collect()
}

/// Output of `w[n] = G w[n-1] + H x[n]`, `y[n] = C w[n]` from rest.
pub fn simulate(g: &Matrix, h: &Matrix, c: &Matrix, x: &[f64]) -> Vec<f64> {
    let n = g.rows();
    let mut w = vec![0.0; n];
    x.iter()
        .map(|&xn| {
            let mut next = vec![0.0; n];
            for i in 0..n {
                next[i] = (0..n).map(|j| g[(i, j)] * w[j]).sum::<f64>() + h[(i, 0)] * xn;
            }
            w = next;
            (0..n).map(|j| c[(0, j)] * w[j]).sum()
        })
        .collect()
}

/// Table 1 and Table 2 memories.
pub const MEMORIES: [f64; 5] = [2.0, 4.0, 8.0, 12.0, 16.0];

/// Table 1 rows for q = 1, 0, -1.
pub const TABLE1: [(f64, [f64; 5]); 3] = [
    (1.0, [0.3185, 0.2268, 0.1338, 0.0940, 0.0724]),
    (0.0, [0.4997, 0.2809, 0.1484, 0.1007, 0.0762]),
    (-1.0, [0.7396, 0.3428, 0.1640, 0.1076, 0.0801]),
];

pub const TABLE2_Q_OPT: [f64; 5] = [3.58, 7.54, 15.52, 23.51, 31.51];
pub const TABLE2_WNG: [f64; 5] = [0.1225, 0.0622, 0.0312, 0.0208, 0.0156];

/// `diag(Ts^k)`: maps time-normalized kinematic coordinates (derivatives
/// times `Ts^k`) back to physical ones.
pub fn kinematic_scaling(order: usize, ts: f64) -> (Matrix, Matrix) {
    let mut d = Matrix::zeros(order, order);
    let mut d_inv = Matrix::zeros(order, order);
    for k in 0..order {
        d[(k, k)] = ts.powi(-(k as i32));
        d_inv[(k, k)] = ts.powi(k as i32);
    }
    (d, d_inv)
}

/// Normwise relative residual `|prod(factors) - expected| / prod |factor|`
/// (max-entry norms), the usual backward-error measure for a product.
pub fn product_residual(factors: &[&Matrix], expected: &Matrix) -> f64 {
    let mut prod = factors[0].clone();
    let mut scale = factors[0].max_abs() * factors[0].cols() as f64;
    for f in &factors[1..] {
        prod = prod.mul(f).unwrap();
        scale *= f.max_abs() * f.cols() as f64;
    }
    prod.max_abs_diff(expected) / scale.max(expected.max_abs())
}

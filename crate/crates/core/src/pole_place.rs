//! Observer gain design by pole placement in process canonical form.
//!
//! The closed-loop observer `G_obs = G - K C_prd` is put in companion form by
//! the transform built from the observability matrices of the process, which
//! turns pole placement into a subtraction of characteristic polynomial
//! coefficients. The gain is then mapped back to kinematic coordinates.

use crate::error::{Error, Result};
use crate::math::{char_poly, Complex, Matrix, Polynomial};
use crate::process::ProcessModel;
use crate::realization::{Form, StateSpaceModel};

/// Residual tolerance for the closed-loop pole check.
pub const POLE_RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Design intent for one observer.
#[derive(Clone, Debug, PartialEq)]
pub struct ObserverSpec {
    pub process: ProcessModel,
    pub poles: Vec<Complex>,
    /// Output lag in samples; negative values predict.
    pub lag: f64,
    /// Index of the state derivative sent to the output.
    pub deriv: usize,
    pub allow_unstable: bool,
}

impl ObserverSpec {
    pub fn new(process: ProcessModel, poles: Vec<Complex>, lag: f64, deriv: usize) -> Result<Self> {
        let order = process.order();
        if poles.len() != order {
            return Err(Error::DimensionMismatch(format!(
                "{} poles for an order-{order} process",
                poles.len()
            )));
        }
        if deriv >= order {
            return Err(Error::DerivativeIndexOutOfRange { index: deriv, order });
        }
        if !lag.is_finite() {
            return Err(Error::InvalidParameter(format!("lag must be finite, got {lag}")));
        }
        if poles.iter().any(|p| !(p.re.is_finite() && p.im.is_finite())) {
            return Err(Error::InvalidParameter("poles must be finite".into()));
        }
        // conjugate closure is exactly the condition for a real polynomial
        Polynomial::from_roots(&poles)?;
        Ok(Self {
            process,
            poles,
            lag,
            deriv,
            allow_unstable: false,
        })
    }

    /// All `K` poles at the real value `p`, `0 <= p < 1`.
    pub fn repeated(process: ProcessModel, p: f64, lag: f64, deriv: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "repeated pole must satisfy 0 <= p < 1, got {p}"
            )));
        }
        let poles = vec![Complex::new(p, 0.0); process.order()];
        Self::new(process, poles, lag, deriv)
    }

    /// Accept poles on or outside the unit circle.
    pub fn allow_unstable(mut self) -> Self {
        self.allow_unstable = true;
        self
    }

    pub fn order(&self) -> usize {
        self.process.order()
    }

    /// The common pole value when every pole is the same real number.
    pub fn repeated_pole(&self) -> Option<f64> {
        let first = self.poles.first()?;
        let same = self
            .poles
            .iter()
            .all(|p| p.im == 0.0 && p.re == first.re);
        same.then_some(first.re)
    }
}

/// Observer gain in process-canonical and kinematic coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GainVectors {
    pub pcf: Matrix,
    pub kin: Matrix,
}

/// Output of [`design`].
#[derive(Clone, Debug)]
pub struct DesignResult {
    pub spec: ObserverSpec,
    pub gains: GainVectors,
    pub a_obs: Polynomial,
    pub g_obs: Vec<f64>,
    pub g_prc: Vec<f64>,
    /// One-step predictor row `C G` of the process.
    pub c_prd: Matrix,
    pub t_pcf_from_kin: Matrix,
    pub t_kin_from_pcf: Matrix,
    /// The observer `<C_obs, G_obs, H_obs>` in kinematic coordinates.
    pub kin: StateSpaceModel,
}

impl DesignResult {
    pub fn order(&self) -> usize {
        self.spec.order()
    }

    pub fn ts(&self) -> f64 {
        self.spec.process.ts()
    }
}

/// Companion-column vector of a monic polynomial: `g[k] = -a[K - k]`.
pub fn g_from_char(a: &Polynomial) -> Result<Vec<f64>> {
    if !a.is_monic() {
        return Err(Error::NotMonic(a.coeffs().first().copied().unwrap_or(0.0)));
    }
    let k = a.degree();
    Ok((0..k).map(|i| -a.coeffs()[k - i]).collect())
}

/// `K_pcf = g_prc - g_obs`.
pub fn gain_pcf(g_prc: &[f64], g_obs: &[f64]) -> Result<Matrix> {
    if g_prc.len() != g_obs.len() {
        return Err(Error::DimensionMismatch(format!(
            "g vectors of length {} and {}",
            g_prc.len(),
            g_obs.len()
        )));
    }
    let diff: Vec<f64> = g_prc.iter().zip(g_obs).map(|(p, o)| p - o).collect();
    Ok(Matrix::column(&diff))
}

/// Stacks `C G^k` for `k = 0..K`.
pub fn observability_matrix(c: &Matrix, g: &Matrix) -> Result<Matrix> {
    let k = g.rows();
    if !g.is_square() || c.rows() != 1 || c.cols() != k {
        return Err(Error::DimensionMismatch(format!(
            "observability of {}x{} output with {}x{} transition",
            c.rows(),
            c.cols(),
            g.rows(),
            g.cols()
        )));
    }
    let mut out = Matrix::zeros(k, k);
    let mut row = c.clone();
    for i in 0..k {
        for j in 0..k {
            out[(i, j)] = row[(0, j)];
        }
        row = row.mul(g)?;
    }
    Ok(out)
}

/// Companion matrix with `g` in its last column and ones on the
/// subdiagonal.
pub fn companion(g: &[f64]) -> Matrix {
    let k = g.len();
    let mut m = Matrix::zeros(k, k);
    for i in 1..k {
        m[(i, i - 1)] = 1.0;
    }
    for (i, &v) in g.iter().enumerate() {
        m[(i, k - 1)] = v;
    }
    m
}

/// `[0, ..., 0, 1]`, the output row paired with [`companion`].
pub fn canonical_output_row(order: usize) -> Matrix {
    let mut c = Matrix::zeros(1, order);
    c[(0, order - 1)] = 1.0;
    c
}

/// Transform pair `(T_kin<-pcf, T_pcf<-kin)` taking the process predictor
/// pair to process canonical form.
pub fn pcf_transform(model: &ProcessModel) -> Result<(Matrix, Matrix)> {
    let g_prc = g_from_char(model.char_poly())?;
    let o_kin = observability_matrix(&model.predictor_row(), model.transition_matrix())?;
    let o_pcf = observability_matrix(&canonical_output_row(model.order()), &companion(&g_prc))?;
    let kin_from_pcf = o_kin.inverse().map_err(|_| Error::Unobservable)?.mul(&o_pcf)?;
    let pcf_from_kin = kin_from_pcf.inverse().map_err(|_| Error::Unobservable)?;
    Ok((kin_from_pcf, pcf_from_kin))
}

/// Kinematic observer gain by Ackermann's formula written in powers of
/// `D = G - I` on time-normalized coordinates.
///
/// With `psi(s) = prod (s + 1 - lambda)` the gain is `psi(D) v`, where `v`
/// solves `C_prd D^j v = [j = K-1]`. `D` is nilpotent, so only the
/// coefficients `e_1..e_K` of `psi` enter, and those stay accurate as the
/// poles approach 1. Forming `T_kin<-pcf K_pcf` instead cancels terms of
/// order one down to `(1 - p)^K`.
pub fn kinematic_gain(process: &ProcessModel, poles: &[Complex]) -> Result<Matrix> {
    let order = process.order();
    if poles.len() != order {
        return Err(Error::DimensionMismatch(format!(
            "{} poles for an order-{order} process",
            poles.len()
        )));
    }
    let unit = process.transition(1.0);
    let delta = unit.sub(&Matrix::identity(order))?;
    let o_delta = observability_matrix(&Matrix::row(unit.row_slice(0)), &delta)?;
    let mut e_last = vec![0.0; order];
    e_last[order - 1] = 1.0;
    let v = o_delta.inverse()?.mul_vec(&e_last)?;

    let shifted: Vec<Complex> = poles.iter().map(|&l| l - 1.0).collect();
    let psi = Polynomial::from_roots(&shifted)?;
    // Horner over psi without its leading term: sum_{j>=1} e_j D^(K-j) v
    let mut acc = vec![0.0; order];
    for &e in &psi.coeffs()[1..] {
        acc = delta.mul_vec(&acc)?;
        for (a, vi) in acc.iter_mut().zip(&v) {
            *a += e * vi;
        }
    }
    let ts = process.ts();
    let scaled: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(i, a)| a / ts.powi(i as i32))
        .collect();
    Ok(Matrix::column(&scaled))
}

/// Places the observer poles and assembles the kinematic realization.
pub fn design(spec: &ObserverSpec) -> Result<DesignResult> {
    if !spec.allow_unstable {
        if let Some(p) = spec.poles.iter().find(|p| !(p.norm() < 1.0)) {
            return Err(Error::UnstablePoles { re: p.re, im: p.im });
        }
    }
    let process = &spec.process;
    let a_obs = Polynomial::from_roots(&spec.poles)?;
    let g_obs = g_from_char(&a_obs)?;
    let g_prc = g_from_char(process.char_poly())?;
    let k_pcf = gain_pcf(&g_prc, &g_obs)?;
    let (t_kin_from_pcf, t_pcf_from_kin) = pcf_transform(process)?;
    let k_kin = kinematic_gain(process, &spec.poles)?;

    let c_prd = process.predictor_row();
    let g_kin = process.transition_matrix().sub(&k_kin.mul(&c_prd)?)?;
    let c_obs = process.output_row(spec.lag, spec.deriv)?;
    verify_pole_placement(&g_kin, process.ts(), &spec.poles)?;

    let order = process.order();
    let kin = StateSpaceModel::new(
        Form::Kin,
        g_kin,
        k_kin.clone(),
        c_obs,
        Matrix::identity(order),
        Matrix::identity(order),
    )?;
    Ok(DesignResult {
        spec: spec.clone(),
        gains: GainVectors { pcf: k_pcf, kin: k_kin },
        a_obs,
        g_obs,
        g_prc,
        c_prd,
        t_pcf_from_kin,
        t_kin_from_pcf,
        kin,
    })
}

/// Checks that the characteristic polynomial of a kinematic transition
/// matrix vanishes at every requested pole, together with its first `m - 1`
/// derivatives for an `m`-fold pole. Returns the largest scaled residual.
///
/// The matrix is first balanced by `diag(Ts^k)`, which removes the sampling
/// period from every entry without changing the eigenvalues.
pub fn verify_pole_placement(g_kin: &Matrix, ts: f64, poles: &[Complex]) -> Result<f64> {
    let n = g_kin.rows();
    let mut balanced = g_kin.clone();
    for i in 0..n {
        for j in 0..n {
            balanced[(i, j)] *= ts.powi(i as i32 - j as i32);
        }
    }
    let cp = char_poly(&balanced)?;
    let scale = cp.coeffs().iter().map(|c| c.abs()).sum::<f64>().max(1.0);

    let mut worst: f64 = 0.0;
    let mut seen = vec![false; poles.len()];
    for i in 0..poles.len() {
        if seen[i] {
            continue;
        }
        let mut multiplicity = 0;
        for j in i..poles.len() {
            if (poles[j] - poles[i]).norm() < 1e-9 {
                seen[j] = true;
                multiplicity += 1;
            }
        }
        let mut deriv = cp.clone();
        for m in 0..multiplicity {
            let tol_scale = scale * (n.max(1) as f64).powi(m);
            worst = worst.max(deriv.eval(poles[i]).norm() / tol_scale);
            deriv = deriv.derivative();
        }
    }
    if worst > POLE_RESIDUAL_TOLERANCE {
        return Err(Error::PolePlacement(worst));
    }
    Ok(worst)
}

/// Kinematic gains of the repeated-pole alpha-beta and alpha-beta-gamma
/// filters.
pub fn closed_form_gains(order: usize, p: f64, ts: f64) -> Result<Matrix> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("pole must satisfy 0 <= p < 1, got {p}")));
    }
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(Error::NonPositiveSamplingPeriod(ts));
    }
    let r = 1.0 - p;
    match order {
        2 => {
            let alpha = 1.0 - p * p;
            let beta = r * r;
            Ok(Matrix::column(&[alpha, beta / ts]))
        }
        3 => {
            let alpha = 1.0 - p * p * p;
            let beta = 1.5 * r * r * (1.0 + p);
            let gamma = 2.0 * r * r * r;
            Ok(Matrix::column(&[alpha, beta / ts, gamma / (2.0 * ts * ts)]))
        }
        other => Err(Error::UnsupportedOrder(other)),
    }
}

/// Pole for an observer memory of `l` samples, `p = exp(-1/l)`.
pub fn memory_to_pole(l: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::InvalidParameter(format!("memory must be positive, got {l}")));
    }
    Ok((-1.0 / l).exp())
}

/// Memory in samples of a pole `0 < p < 1`.
pub fn pole_to_memory(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("pole must satisfy 0 < p < 1, got {p}")));
    }
    Ok(-1.0 / p.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn worked_example() -> DesignResult {
        let process = ProcessModel::new(3, 0.04).unwrap();
        design(&ObserverSpec::repeated(process, 0.8, 2.0, 0).unwrap()).unwrap()
    }

    #[test]
    fn g_vectors_from_polynomials() {
        let g = g_from_char(&Polynomial::new(vec![1.0, -2.4, 1.92, -0.512])).unwrap();
        assert_eq!(g, vec![0.512, -1.92, 2.4]);
        let g = g_from_char(&Polynomial::new(vec![1.0, -3.0, 3.0, -1.0])).unwrap();
        assert_eq!(g, vec![1.0, -3.0, 3.0]);
        assert_eq!(g_from_char(&Polynomial::new(vec![1.0, 0.0])).unwrap(), vec![-0.0]);
        assert!(matches!(
            g_from_char(&Polynomial::new(vec![2.0, 1.0])),
            Err(Error::NotMonic(_))
        ));
    }

    #[test]
    fn canonical_gain() {
        let k = gain_pcf(&[1.0, -3.0, 3.0], &[0.512, -1.92, 2.4]).unwrap();
        assert!(close(k.as_slice(), &[0.488, -1.08, 0.6], 1e-12));
        let same = gain_pcf(&[1.0, -3.0, 3.0], &[1.0, -3.0, 3.0]).unwrap();
        assert_eq!(same.as_slice(), &[0.0, 0.0, 0.0]);
        let p = 0.3;
        assert!(close(gain_pcf(&[1.0], &[p]).unwrap().as_slice(), &[1.0 - p], 0.0));
        assert!(gain_pcf(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn observability_of_process_pairs() {
        let m = ProcessModel::new(3, 0.04).unwrap();
        let o = observability_matrix(&m.predictor_row(), m.transition_matrix()).unwrap();
        let expected = Matrix::from_rows(&[[1.0, 0.04, 0.0008], [1.0, 0.08, 0.0032], [1.0, 0.12, 0.0072]]);
        assert!(o.max_abs_diff(&expected) < 1e-15);

        let o = observability_matrix(&canonical_output_row(3), &companion(&[1.0, -3.0, 3.0])).unwrap();
        assert_eq!(o, Matrix::from_rows(&[[0.0, 0.0, 1.0], [0.0, 1.0, 3.0], [1.0, 3.0, 6.0]]));

        let o = observability_matrix(&Matrix::row(&[1.0]), &Matrix::identity(1)).unwrap();
        assert_eq!(o, Matrix::identity(1));
    }

    #[test]
    fn companion_layout() {
        let g = companion(&[1.0, -3.0, 3.0]);
        assert_eq!(g, Matrix::from_rows(&[[0.0, 0.0, 1.0], [1.0, 0.0, -3.0], [0.0, 1.0, 3.0]]));
        let g = companion(&[0.512, -1.92, 2.4]);
        assert_eq!(g.col_vec(2), vec![0.512, -1.92, 2.4]);
        assert_eq!(companion(&[0.25]), Matrix::from_rows(&[[0.25]]));
        assert_eq!(canonical_output_row(3).as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn process_transform_pair() {
        let m = ProcessModel::new(3, 0.04).unwrap();
        let (kin_from_pcf, pcf_from_kin) = pcf_transform(&m).unwrap();
        let expected = Matrix::from_rows(&[[1.0, 0.0, 0.0], [-37.5, -12.5, 12.5], [625.0, 625.0, 625.0]]);
        assert!(kin_from_pcf.max_abs_diff(&expected) < 1e-9);
        let expected = Matrix::from_rows(&[[1.0, 0.0, 0.0], [-2.0, -0.04, 0.0008], [1.0, 0.04, 0.0008]]);
        assert!(pcf_from_kin.max_abs_diff(&expected) < 1e-12);

        let (a, b) = pcf_transform(&ProcessModel::new(1, 0.1).unwrap()).unwrap();
        assert_eq!(a, Matrix::identity(1));
        assert_eq!(b, Matrix::identity(1));
    }

    #[test]
    fn worked_example_gains_and_dynamics() {
        let d = worked_example();
        assert!(close(d.gains.kin.as_slice(), &[0.488, 2.7, 5.0], 1e-9));
        let expected = Matrix::from_rows(&[
            [0.512, 0.02048, 0.0004096],
            [-2.7, 0.892, 0.03784],
            [-5.0, -0.2, 0.996],
        ]);
        assert!(d.kin.g.max_abs_diff(&expected) < 1e-9);
        assert!(close(d.kin.c.as_slice(), &[1.0, -0.08, 0.0032], 1e-15));
    }

    #[test]
    fn first_order_is_exponential_smoother() {
        let p = 0.6;
        let process = ProcessModel::new(1, 0.5).unwrap();
        let d = design(&ObserverSpec::repeated(process, p, 0.0, 0).unwrap()).unwrap();
        assert!((d.kin.g[(0, 0)] - p).abs() < 1e-15);
        assert!((d.kin.h[(0, 0)] - (1.0 - p)).abs() < 1e-15);
    }

    #[test]
    fn unstable_poles_need_override() {
        let process = ProcessModel::new(2, 1.0).unwrap();
        let poles = vec![Complex::new(1.2, 0.0), Complex::new(0.5, 0.0)];
        let spec = ObserverSpec::new(process, poles, 0.0, 0).unwrap();
        assert!(matches!(design(&spec), Err(Error::UnstablePoles { .. })));
        assert!(design(&spec.allow_unstable()).is_ok());
    }

    #[test]
    fn spec_validation() {
        let process = ProcessModel::new(2, 1.0).unwrap();
        assert!(ObserverSpec::repeated(process.clone(), 1.0, 0.0, 0).is_err());
        assert!(ObserverSpec::repeated(process.clone(), -0.1, 0.0, 0).is_err());
        assert!(matches!(
            ObserverSpec::repeated(process.clone(), 0.5, 0.0, 2),
            Err(Error::DerivativeIndexOutOfRange { .. })
        ));
        let lonely = vec![Complex::new(0.5, 0.2), Complex::new(0.5, 0.3)];
        assert!(matches!(
            ObserverSpec::new(process.clone(), lonely, 0.0, 0),
            Err(Error::NonRealCoefficients { .. })
        ));
        assert!(ObserverSpec::new(process, vec![Complex::new(0.5, 0.0)], 0.0, 0).is_err());
    }

    #[test]
    fn complex_pole_pair_is_placed() {
        let process = ProcessModel::new(3, 0.1).unwrap();
        let poles = vec![
            Complex::new(0.6, 0.3),
            Complex::new(0.6, -0.3),
            Complex::new(0.7, 0.0),
        ];
        let d = design(&ObserverSpec::new(process, poles.clone(), 1.0, 0).unwrap()).unwrap();
        let cp = char_poly(&d.kin.g).unwrap();
        for p in poles {
            assert!(cp.eval(p).norm() < 1e-9);
        }
    }

    #[test]
    fn closed_forms() {
        assert!(close(closed_form_gains(3, 0.8, 0.04).unwrap().as_slice(), &[0.488, 2.7, 5.0], 1e-12));
        let ts = 0.25;
        assert_eq!(closed_form_gains(2, 0.0, ts).unwrap().as_slice(), &[1.0, 1.0 / ts]);
        assert!(close(closed_form_gains(2, 0.8, 1.0).unwrap().as_slice(), &[0.36, 0.04], 1e-15));
        assert!(matches!(closed_form_gains(4, 0.5, 1.0), Err(Error::UnsupportedOrder(4))));
        assert!(closed_form_gains(2, 1.0, 1.0).is_err());
    }

    #[test]
    fn memory_conversions() {
        assert!((memory_to_pole(4.4814).unwrap() - 0.8).abs() < 1e-4);
        assert!((memory_to_pole(4.0).unwrap() - 0.7788).abs() < 5e-5);
        assert!(memory_to_pole(1e-3).unwrap() < 1e-300);
        assert!((pole_to_memory(memory_to_pole(7.5).unwrap()).unwrap() - 7.5).abs() < 1e-12);
        assert!(memory_to_pole(0.0).is_err());
        assert!(pole_to_memory(0.0).is_err());
        assert!(pole_to_memory(1.0).is_err());
    }
}

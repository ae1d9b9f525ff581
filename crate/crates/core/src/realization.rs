//! Equivalent state-space realizations of a designed observer, transfer
//! function extraction and sample-by-sample stepping.
//!
//! All canonical forms use delay indexing: the transition matrices carry
//! their ones *below* the diagonal, so the state behaves like a bank of delay
//! registers.

use crate::analysis::TransferFunction;
use crate::error::{Error, Result};
use crate::math::{Matrix, Polynomial};
use crate::pole_place::{canonical_output_row, companion, observability_matrix, DesignResult};
use crate::process::ProcessModel;

/// Coordinate system of a realization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Form {
    /// Kinematic: element `k` is the `k`-th derivative of position.
    Kin,
    /// Process canonical form.
    Pcf,
    /// Observable canonical form.
    Ocf,
    /// Controllable canonical form.
    Ccf,
}

impl Form {
    pub const ALL: [Form; 4] = [Form::Kin, Form::Pcf, Form::Ocf, Form::Ccf];

    pub fn name(self) -> &'static str {
        match self {
            Form::Kin => "kin",
            Form::Pcf => "pcf",
            Form::Ocf => "ocf",
            Form::Ccf => "ccf",
        }
    }
}

/// `w[n] = G w[n-1] + H x[n]`, `y[n] = C w[n]`, together with the transform
/// pair linking the internal state to kinematic coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpaceModel {
    pub form: Form,
    pub g: Matrix,
    pub h: Matrix,
    pub c: Matrix,
    pub t_kin_from_form: Matrix,
    pub t_form_from_kin: Matrix,
}

/// Internal state of a running filter, tagged with its realization.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterState {
    form: Form,
    w: Vec<f64>,
}

impl FilterState {
    pub fn form(&self) -> Form {
        self.form
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }
}

impl StateSpaceModel {
    pub fn new(
        form: Form,
        g: Matrix,
        h: Matrix,
        c: Matrix,
        t_kin_from_form: Matrix,
        t_form_from_kin: Matrix,
    ) -> Result<Self> {
        let k = g.rows();
        let ok = g.is_square()
            && h.rows() == k
            && h.cols() == 1
            && c.rows() == 1
            && c.cols() == k
            && t_kin_from_form.rows() == k
            && t_kin_from_form.is_square()
            && t_form_from_kin.rows() == k
            && t_form_from_kin.is_square();
        if !ok {
            return Err(Error::DimensionMismatch(format!(
                "inconsistent {} realization of order {k}",
                form.name()
            )));
        }
        Ok(Self {
            form,
            g,
            h,
            c,
            t_kin_from_form,
            t_form_from_kin,
        })
    }

    pub fn order(&self) -> usize {
        self.g.rows()
    }

    pub fn zero_state(&self) -> FilterState {
        FilterState {
            form: self.form,
            w: vec![0.0; self.order()],
        }
    }

    /// State for a first sample `x0`: position `x0` with zero derivatives,
    /// mapped into this realization's coordinates.
    pub fn initial_state(&self, x0: f64) -> FilterState {
        let w = self.t_form_from_kin.col_vec(0).into_iter().map(|t| t * x0).collect();
        FilterState { form: self.form, w }
    }

    /// Builds a state from raw internal coordinates.
    pub fn state_from(&self, w: Vec<f64>) -> Result<FilterState> {
        if w.len() != self.order() {
            return Err(Error::DimensionMismatch(format!(
                "state of length {} for order {}",
                w.len(),
                self.order()
            )));
        }
        Ok(FilterState { form: self.form, w })
    }

    fn check(&self, state: &FilterState) -> Result<()> {
        if state.form != self.form {
            return Err(Error::FormMismatch {
                model: self.form,
                state: state.form,
            });
        }
        Ok(())
    }

    pub fn output(&self, state: &FilterState) -> Result<f64> {
        self.check(state)?;
        Ok(self.c.row_slice(0).iter().zip(&state.w).map(|(c, w)| c * w).sum())
    }

    /// Advances the state with input `x` and returns the output of the
    /// updated state (current-observer form).
    pub fn step(&self, state: &mut FilterState, x: f64) -> Result<f64> {
        self.check(state)?;
        let mut next = self.g.mul_vec(&state.w)?;
        for (i, v) in next.iter_mut().enumerate() {
            *v += self.h[(i, 0)] * x;
        }
        state.w = next;
        self.output(state)
    }

    /// Runs a whole input sequence, returning one output per sample.
    pub fn run(&self, state: &mut FilterState, input: &[f64]) -> Result<Vec<f64>> {
        input.iter().map(|&x| self.step(state, x)).collect()
    }

    /// Kinematic state estimate `T_kin<-form w`.
    pub fn kinematic(&self, state: &FilterState) -> Result<Vec<f64>> {
        self.check(state)?;
        self.t_kin_from_form.mul_vec(&state.w)
    }
}

/// Realization in process canonical form.
pub fn pcf_realization(design: &DesignResult) -> Result<StateSpaceModel> {
    StateSpaceModel::new(
        Form::Pcf,
        companion(&design.g_obs),
        design.gains.pcf.clone(),
        design.kin.c.mul(&design.t_kin_from_pcf)?,
        design.t_kin_from_pcf.clone(),
        design.t_pcf_from_kin.clone(),
    )
}

/// The same design on a unit sampling period, with the factors linking it
/// back: kinematic state `k` is `Ts^-k` times the unit-period state, and the
/// output row carries an extra `Ts^-deriv`.
struct UnitPeriod {
    design: DesignResult,
    output_scale: f64,
    /// `Ts^k`
    powers: Vec<f64>,
}

impl UnitPeriod {
    fn new(design: &DesignResult) -> Result<Self> {
        let ts = design.ts();
        let order = design.order();
        let unit = if ts == 1.0 {
            design.clone()
        } else {
            let mut spec = design.spec.clone();
            spec.process = ProcessModel::with_order_cap(order, 1.0, order)?;
            crate::pole_place::design(&spec)?
        };
        Ok(Self {
            design: unit,
            output_scale: ts.powi(-(design.spec.deriv as i32)),
            powers: (0..order).map(|k| ts.powi(k as i32)).collect(),
        })
    }

    /// `M diag(Ts^k)`: maps a transform out of unit-period coordinates into
    /// one out of kinematic coordinates.
    fn from_kin(&self, m: &Matrix) -> Matrix {
        let mut out = m.clone();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                out[(i, j)] *= self.powers[j];
            }
        }
        out
    }

    /// `diag(Ts^-k) M`.
    fn to_kin(&self, m: &Matrix) -> Matrix {
        let mut out = m.clone();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                out[(i, j)] /= self.powers[i];
            }
        }
        out
    }
}

/// Realization in observable canonical form. Fails with
/// [`Error::Unobservable`] when the output row chosen by the lag and
/// derivative index hides part of the state.
///
/// The transforms are computed for a unit sampling period and rescaled, so
/// the canonical matrices do not depend on `Ts` beyond the output scale of
/// a differentiator.
pub fn ocf_realization(design: &DesignResult) -> Result<StateSpaceModel> {
    let order = design.order();
    let unit = UnitPeriod::new(design)?;
    let kin = &unit.design.kin;
    let g_ocf = companion(&design.g_obs);
    let c_ocf = canonical_output_row(order);
    let o_kin = observability_matrix(&kin.c, &kin.g)?;
    let o_ocf = observability_matrix(&c_ocf, &g_ocf)?;
    // O_ocf is anti-triangular with a unit anti-diagonal, so inverting it
    // rather than O_kin avoids losing accuracy to the poorly conditioned O_kin.
    let ocf_from_unit = o_ocf.inverse()?.mul(&o_kin)?.scale(unit.output_scale);
    let unit_from_ocf = ocf_from_unit.inverse().map_err(|_| Error::Unobservable)?;
    let h_ocf = ocf_from_unit.mul(&kin.h)?;
    StateSpaceModel::new(
        Form::Ocf,
        g_ocf,
        h_ocf,
        c_ocf,
        unit.to_kin(&unit_from_ocf),
        unit.from_kin(&ocf_from_unit),
    )
}

/// Places `G^k H` in column `k`.
pub fn controllability_matrix(g: &Matrix, h: &Matrix) -> Result<Matrix> {
    let k = g.rows();
    if !g.is_square() || h.rows() != k || h.cols() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "controllability of {}x{} transition with {}x{} input",
            g.rows(),
            g.cols(),
            h.rows(),
            h.cols()
        )));
    }
    let mut out = Matrix::zeros(k, k);
    let mut col = h.clone();
    for j in 0..k {
        for i in 0..k {
            out[(i, j)] = col[(i, 0)];
        }
        col = g.mul(&col)?;
    }
    Ok(out)
}

/// Controllable-form transition: `g` reversed along the first row, ones on
/// the subdiagonal.
pub fn controllable_companion(g: &[f64]) -> Matrix {
    let k = g.len();
    let mut m = Matrix::zeros(k, k);
    for (j, &v) in g.iter().rev().enumerate() {
        m[(0, j)] = v;
    }
    for i in 1..k {
        m[(i, i - 1)] = 1.0;
    }
    m
}

/// Realization in controllable canonical form. Fails with
/// [`Error::Uncontrollable`] when the gain vector cannot excite every mode.
pub fn ccf_realization(design: &DesignResult) -> Result<StateSpaceModel> {
    let order = design.order();
    let unit = UnitPeriod::new(design)?;
    let kin = &unit.design.kin;
    let g_ccf = controllable_companion(&design.g_obs);
    let mut h_ccf = Matrix::zeros(order, 1);
    h_ccf[(0, 0)] = 1.0;
    let ctrb_kin = controllability_matrix(&kin.g, &kin.h)?;
    let ctrb_ccf = controllability_matrix(&g_ccf, &h_ccf)?;
    let unit_from_ccf = ctrb_kin.mul(&ctrb_ccf.inverse().map_err(|_| Error::Uncontrollable)?)?;
    let ccf_from_unit = unit_from_ccf.inverse().map_err(|_| Error::Uncontrollable)?;
    let c_ccf = kin.c.mul(&unit_from_ccf)?.scale(unit.output_scale);
    StateSpaceModel::new(
        Form::Ccf,
        g_ccf,
        h_ccf,
        c_ccf,
        unit.to_kin(&unit_from_ccf),
        unit.from_kin(&ccf_from_unit),
    )
}

/// Any of the four realizations by form.
pub fn realize(design: &DesignResult, form: Form) -> Result<StateSpaceModel> {
    match form {
        Form::Kin => Ok(design.kin.clone()),
        Form::Pcf => pcf_realization(design),
        Form::Ocf => ocf_realization(design),
        Form::Ccf => ccf_realization(design),
    }
}

/// Numerator from an observable-form input vector: `b[K-1-j] = H[j]`.
pub fn numerator_from_ocf(ss: &StateSpaceModel) -> Polynomial {
    let k = ss.order();
    let mut b = vec![0.0; k + 1];
    for j in 0..k {
        b[k - 1 - j] = ss.h[(j, 0)];
    }
    Polynomial::new(b)
}

/// Numerator from a controllable-form output row: `b[j] = C[j]`.
pub fn numerator_from_ccf(ss: &StateSpaceModel) -> Polynomial {
    let mut b = ss.c.row_slice(0).to_vec();
    b.push(0.0);
    Polynomial::new(b)
}

/// Transfer function `(b, a)` of the designed filter.
///
/// The numerator is read from the observable form; when that form does not
/// exist it is read from the controllable form instead.
pub fn extract_transfer(design: &DesignResult) -> Result<TransferFunction> {
    let b = match ocf_realization(design) {
        Ok(ocf) => numerator_from_ocf(&ocf),
        Err(Error::Unobservable) => numerator_from_ccf(&ccf_realization(design)?),
        Err(e) => return Err(e),
    };
    TransferFunction::new(b, design.a_obs.clone())
}

/// Direct-form coefficients of the second-order repeated-pole smoother with
/// lag `q`.
pub fn lde_k2_closed(p: f64, q: f64) -> TransferFunction {
    let r = 1.0 - p;
    let b = vec![(q * p + p - q + 1.0) * r, -(q * p + 2.0 * p - q) * r, 0.0];
    let a = vec![1.0, -2.0 * p, p * p];
    TransferFunction::new(Polynomial::new(b), Polynomial::new(a)).expect("monic by construction")
}

use observer_core::analysis::{optimal_lag_k2, wng_numeric};
use observer_core::pole_place::{pole_to_memory, verify_pole_placement};
use observer_core::realization::realize;
use observer_core::{extract_transfer, Complex, DesignResult, Error, Form, Matrix, ProcessModel};
use serde::{Deserialize, Serialize};

use crate::args::Placement;

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct PoleEntry {
    pub re: f64,
    pub im: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct Inputs {
    pub order: usize,
    pub ts: f64,
    pub lag: f64,
    pub deriv: usize,
    pub allow_unstable: bool,
    /// Set when the poles were given as one repeated value or a memory length.
    pub pole: Option<f64>,
    pub memory: Option<f64>,
    pub poles: Vec<PoleEntry>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct Realization {
    pub g: Vec<Vec<f64>>,
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub t_kin_from_form: Vec<Vec<f64>>,
    pub t_form_from_kin: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Default)]
pub struct Realizations {
    pub kin: Option<Realization>,
    pub pcf: Option<Realization>,
    pub ocf: Option<Realization>,
    pub ccf: Option<Realization>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct DesignDocument {
    pub inputs: Inputs,
    /// Closed-loop characteristic polynomial, leading 1 first.
    pub a_obs: Vec<f64>,
    pub g_prc: Vec<f64>,
    pub g_obs: Vec<f64>,
    pub k_pcf: Vec<f64>,
    pub k_kin: Vec<f64>,
    pub c_prd: Vec<f64>,
    pub process_g: Vec<Vec<f64>>,
    pub observer_g: Vec<Vec<f64>>,
    pub t_pcf_from_kin: Vec<Vec<f64>>,
    pub t_kin_from_pcf: Vec<Vec<f64>>,
    /// `H(z) = b(z^-1) / a(z^-1)`.
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub realizations: Realizations,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub wng: Option<f64>,
    pub q_opt: Option<f64>,
    pub pole_residual: f64,
}

fn realization_entry(ss: &observer_core::StateSpaceModel) -> Realization {
    Realization {
        g: ss.g.to_rows(),
        h: ss.h.as_slice().to_vec(),
        c: ss.c.as_slice().to_vec(),
        t_kin_from_form: ss.t_kin_from_form.to_rows(),
        t_form_from_kin: ss.t_form_from_kin.to_rows(),
    }
}

impl DesignDocument {
    /// Collects a design into a document. Requested realizations that do not
    /// exist for this design are an error when asked for singly and `null`
    /// under `all`.
    pub fn build(
        design: &DesignResult,
        placement: &Placement,
        forms: &[Form],
    ) -> Result<Self, Error> {
        let spec = &design.spec;
        let order = design.order();
        let ts = design.ts();
        let tf = extract_transfer(design)?;

        let mut realizations = Realizations::default();
        for &form in forms {
            let entry = match realize(design, form) {
                Ok(ss) => Some(realization_entry(&ss)),
                Err(e) if forms.len() == 1 => return Err(e),
                Err(_) => None,
            };
            match form {
                Form::Kin => realizations.kin = entry,
                Form::Pcf => realizations.pcf = entry,
                Form::Ocf => realizations.ocf = entry,
                Form::Ccf => realizations.ccf = entry,
            }
        }

        let repeated = spec.repeated_pole();
        let k = design.gains.kin.as_slice();
        let (alpha, beta, gamma) = match repeated {
            Some(_) if order <= 3 => (
                Some(k[0]),
                (order >= 2).then(|| k[1] * ts),
                (order >= 3).then(|| k[2] * 2.0 * ts * ts),
            ),
            _ => (None, None, None),
        };
        let memory = match placement {
            Placement::Memory(l) => Some(*l),
            _ => repeated.and_then(|p| pole_to_memory(p).ok()),
        };
        let stable = spec.poles.iter().all(|p| p.norm() < 1.0);
        let wng = if stable { wng_numeric(&tf).ok() } else { None };
        let q_opt = match repeated {
            Some(p) if order == 2 && spec.deriv == 0 && (0.0..1.0).contains(&p) => {
                Some(optimal_lag_k2(p))
            }
            _ => None,
        };

        let pole_residual = verify_pole_placement(&design.kin.g, ts, &spec.poles)?;
        Ok(Self {
            inputs: Inputs {
                order,
                ts,
                lag: spec.lag,
                deriv: spec.deriv,
                allow_unstable: spec.allow_unstable,
                pole: repeated,
                memory,
                poles: spec.poles.iter().map(|p| PoleEntry { re: p.re, im: p.im }).collect(),
            },
            a_obs: design.a_obs.coeffs().to_vec(),
            g_prc: design.g_prc.clone(),
            g_obs: design.g_obs.clone(),
            k_pcf: design.gains.pcf.as_slice().to_vec(),
            k_kin: k.to_vec(),
            c_prd: design.c_prd.as_slice().to_vec(),
            process_g: spec.process.transition_matrix().to_rows(),
            observer_g: design.kin.g.to_rows(),
            t_pcf_from_kin: design.t_pcf_from_kin.to_rows(),
            t_kin_from_pcf: design.t_kin_from_pcf.to_rows(),
            b: tf.b.coeffs().to_vec(),
            a: tf.a.coeffs().to_vec(),
            realizations,
            alpha,
            beta,
            gamma,
            wng,
            q_opt,
            pole_residual,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Re-checks pole placement from the stored gain alone: rebuilds the
    /// process, forms `G - K C_prd` and compares its eigenvalues with the
    /// stored poles. Returns the residual.
    pub fn verify(&self) -> Result<f64, Error> {
        let process = ProcessModel::new(self.inputs.order, self.inputs.ts)?;
        let g = process.transition_matrix();
        let k = Matrix::column(&self.k_kin);
        let c = process.predictor_row();
        let g_obs = g.sub(&k.mul(&c)?)?;
        let poles: Vec<Complex> = self
            .inputs
            .poles
            .iter()
            .map(|p| Complex::new(p.re, p.im))
            .collect();
        verify_pole_placement(&g_obs, self.inputs.ts, &poles)
    }
}

//! Explicit Euler integration of the continuous Newton flow
//! `J(x) dx/dt = −F(x)`, using the minimum-norm velocity.
//!
//! Along an exact trajectory every residual component decays like `e^{−t}`.
//! [`decay_check`] measures how far a computed trajectory is from that law.

use thiserror::Error;

use crate::linalg::{min_norm_step, norm2, LinalgError};
use crate::problem::{fd_jacobian, ProblemSpec};

/// Difference step used when the problem has no analytic Jacobian.
const FD_EPS: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("jacobian lost full row rank at t = {t}")]
    RankDeficientJacobian { t: f64 },
    #[error("non-finite value at t = {t}")]
    NonFiniteEncountered { t: f64 },
    #[error("residual at the start point is zero")]
    DegenerateStart,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub residual_norms: Vec<f64>,
    pub residuals: Vec<Vec<f64>>,
}

impl FlowTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Integrates from `x0` to `t_end` with step `h`; the last step is shortened
/// to land on `t_end`. `t_end = 0` records only the start.
pub fn integrate_flow(
    problem: &ProblemSpec,
    x0: &[f64],
    t_end: f64,
    h: f64,
) -> Result<FlowTrace, FlowError> {
    if x0.len() != problem.n() {
        return Err(FlowError::InvalidInput(format!(
            "start point has {} entries, expected {}",
            x0.len(),
            problem.n()
        )));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(FlowError::InvalidInput(format!(
            "step must be positive, got {h}"
        )));
    }
    if !(t_end == 0.0 || t_end >= h) || !t_end.is_finite() {
        return Err(FlowError::InvalidInput(format!(
            "need t_end = 0 or t_end >= h, got {t_end}"
        )));
    }
    let mut x = x0.to_vec();
    let mut f = problem.residual(&x);
    if !f.iter().all(|v| v.is_finite()) {
        return Err(FlowError::NonFiniteEncountered { t: 0.0 });
    }
    let mut trace = FlowTrace {
        times: vec![0.0],
        states: vec![x.clone()],
        residual_norms: vec![norm2(&f)],
        residuals: vec![f.clone()],
    };
    let steps = if t_end == 0.0 {
        0
    } else {
        (t_end / h - 1e-9).ceil() as usize
    };
    let mut t = 0.0;
    for k in 0..steps {
        let step = if k + 1 == steps { t_end - t } else { h };
        let jac = match problem.analytic_jacobian(&x) {
            Some(eval) => eval.matrix,
            None => {
                fd_jacobian(problem, &x, &f, FD_EPS)
                    .map_err(|_| FlowError::NonFiniteEncountered { t })?
                    .matrix
            }
        };
        if !jac.is_finite() {
            return Err(FlowError::NonFiniteEncountered { t });
        }
        let (s, _) = min_norm_step(&jac, &f, None).map_err(|e| match e {
            LinalgError::RankDeficientJacobian { .. } | LinalgError::SingularTriangular { .. } => {
                FlowError::RankDeficientJacobian { t }
            }
            _ => FlowError::NonFiniteEncountered { t },
        })?;
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += step * si;
        }
        t = if k + 1 == steps {
            t_end
        } else {
            (k + 1) as f64 * h
        };
        problem.residual_into(&x, &mut f);
        if !f.iter().all(|v| v.is_finite()) || !x.iter().all(|v| v.is_finite()) {
            return Err(FlowError::NonFiniteEncountered { t });
        }
        trace.times.push(t);
        trace.states.push(x.clone());
        trace.residual_norms.push(norm2(&f));
        trace.residuals.push(f.clone());
    }
    Ok(trace)
}

/// Largest deviation from exponential decay over the recorded nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport {
    /// `max_t |‖F(x(t))‖/‖F(x0)‖ − e^{−t}| · e^{t}`.
    pub norm_deviation: f64,
    /// Same measure per component, `F_i(x(t))/F_i(x0)`; `None` when some
    /// `F_i(x0)` is zero.
    pub component_deviation: Option<f64>,
}

pub fn decay_check(trace: &FlowTrace) -> Result<DecayReport, FlowError> {
    if trace.is_empty() {
        return Err(FlowError::InvalidInput("empty trace".into()));
    }
    let f0 = &trace.residuals[0];
    let n0 = trace.residual_norms[0];
    if n0 == 0.0 {
        return Err(FlowError::DegenerateStart);
    }
    let componentwise = f0.iter().all(|v| *v != 0.0);
    let mut norm_dev = 0.0f64;
    let mut comp_dev = 0.0f64;
    for ((t, norm), f) in trace
        .times
        .iter()
        .zip(&trace.residual_norms)
        .zip(&trace.residuals)
    {
        let decay = (-t).exp();
        norm_dev = norm_dev.max((norm / n0 - decay).abs() / decay);
        if componentwise {
            for (fi, f0i) in f.iter().zip(f0) {
                comp_dev = comp_dev.max((fi / f0i - decay).abs() / decay);
            }
        }
    }
    Ok(DecayReport {
        norm_deviation: norm_dev,
        component_deviation: componentwise.then_some(comp_dev),
    })
}

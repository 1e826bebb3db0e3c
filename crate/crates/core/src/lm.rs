//! Levenberg–Marquardt baseline.
//!
//! Textbook Marquardt damping: each iteration evaluates a fresh Jacobian,
//! then solves damped least-squares problems with increasing `λ` until the
//! residual norm decreases.

use std::time::Instant;

use thiserror::Error;

use crate::linalg::{inf_norm, norm2, thin_qr_owned, DenseMatrix, LinalgError};
use crate::outcome::{IterationRecord, Method, SolveOutcome, SolveStatus};
use crate::problem::{evaluate_jacobian, JacobianMode, ProblemSpec};
use crate::solver::SolveError;

/// Largest damping tried before the run is abandoned.
const LAMBDA_MAX: f64 = 1e16;

#[derive(Debug, Clone, PartialEq)]
pub struct LMConfig {
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub tol: f64,
    /// Budget of Jacobian evaluations.
    pub maxit: usize,
    pub fd_eps: f64,
    pub jacobian: JacobianMode,
}

impl Default for LMConfig {
    fn default() -> Self {
        Self {
            lambda0: 1e-2,
            lambda_up: 4.0,
            lambda_down: 0.25,
            tol: 1e-6,
            maxit: 200,
            fd_eps: 1e-6,
            jacobian: JacobianMode::ForwardDifference,
        }
    }
}

impl LMConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |what: &str| Err(SolveError::InvalidConfig(what.to_string()));
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return bad("need lambda0 > 0");
        }
        if !(self.lambda_up > 1.0) {
            return bad("need lambda_up > 1");
        }
        if !(self.lambda_down > 0.0 && self.lambda_down < 1.0) {
            return bad("need 0 < lambda_down < 1");
        }
        if !(self.tol > 0.0) {
            return bad("need tol > 0");
        }
        if self.maxit < 1 {
            return bad("need maxit >= 1");
        }
        if !(self.fd_eps > 0.0) {
            return bad("need fd_eps > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LmError {
    #[error("damped system is singular")]
    SingularSystem,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid damping: {0}")]
    InvalidDamping(String),
}

/// Componentwise scaling `D = diag(d)` of the damping term.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingDiagonal {
    pub d: Vec<f64>,
}

impl ScalingDiagonal {
    pub fn zeros(n: usize) -> Self {
        Self { d: vec![0.0; n] }
    }

    pub fn ones(n: usize) -> Self {
        Self { d: vec![1.0; n] }
    }
}

/// `d_i ← max(d_i, ‖jac[:, i]‖)`.
pub fn update_scaling(d: &ScalingDiagonal, jac: &DenseMatrix) -> Result<ScalingDiagonal, LmError> {
    if d.d.len() != jac.cols() {
        return Err(LmError::Dimension(format!(
            "scaling has {} entries, jacobian {} columns",
            d.d.len(),
            jac.cols()
        )));
    }
    let d =
        d.d.iter()
            .enumerate()
            .map(|(i, &di)| di.max(norm2(jac.column(i))))
            .collect();
    Ok(ScalingDiagonal { d })
}

/// Minimizer of `‖jac·s + f‖² + λ‖diag(d)·s‖²`.
///
/// Solved as the least-squares problem for the stacked matrix
/// `[jac; √λ·diag(d)]` against `[−f; 0]` by Householder QR.
pub fn lm_step(
    jac: &DenseMatrix,
    f: &[f64],
    d: &ScalingDiagonal,
    lambda: f64,
) -> Result<Vec<f64>, LmError> {
    let (m, n) = (jac.rows(), jac.cols());
    if f.len() != m || d.d.len() != n {
        return Err(LmError::Dimension(format!(
            "jacobian is {m}x{n}, residual has {} entries, scaling {}",
            f.len(),
            d.d.len()
        )));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(LmError::InvalidDamping(format!("{lambda}")));
    }
    if d.d.iter().any(|v| !(*v >= 0.0)) {
        return Err(LmError::InvalidDamping("negative scaling entry".into()));
    }
    let extra = if lambda > 0.0 { n } else { 0 };
    if m + extra < n {
        return Err(LmError::SingularSystem);
    }
    let sqrt_lambda = lambda.sqrt();
    let mut stacked = DenseMatrix::zeros(m + extra, n);
    for j in 0..n {
        let col = stacked.column_mut(j);
        col[..m].copy_from_slice(jac.column(j));
        if extra > 0 {
            col[m + j] = sqrt_lambda * d.d[j];
        }
    }
    let mut rhs = vec![0.0; m + extra];
    for (r, v) in rhs.iter_mut().zip(f) {
        *r = -v;
    }
    let qr = thin_qr_owned(stacked).map_err(|_| LmError::SingularSystem)?;
    match qr.least_squares(&rhs) {
        Ok(s) if s.iter().all(|v| v.is_finite()) => Ok(s),
        Ok(_) => Err(LmError::SingularSystem),
        Err(LinalgError::Dimension(e)) => Err(LmError::Dimension(e)),
        Err(_) => Err(LmError::SingularSystem),
    }
}

/// Scaling used in the step: zero entries (columns that have never been
/// nonzero) count as one.
fn effective_scaling(d: &ScalingDiagonal) -> ScalingDiagonal {
    ScalingDiagonal {
        d: d.d.iter().map(|&v| if v > 0.0 { v } else { 1.0 }).collect(),
    }
}

/// Runs the baseline from `x0` (the problem's default start when `None`).
///
/// `iterations` in the outcome counts Jacobian evaluations; every rejected
/// damping value is a separate pass in the trace.
pub fn lm_solve(
    problem: &ProblemSpec,
    x0: Option<&[f64]>,
    config: &LMConfig,
) -> Result<SolveOutcome, SolveError> {
    config.validate()?;
    if config.jacobian == JacobianMode::Analytic && !problem.has_analytic_jacobian() {
        return Err(SolveError::MissingJacobian(problem.name().to_string()));
    }
    let (m, n) = (problem.m(), problem.n());
    let mut x = match x0 {
        Some(x0) if x0.len() != n => {
            return Err(SolveError::InvalidStart(format!(
                "start point has {} entries, expected {n}",
                x0.len()
            )))
        }
        Some(x0) => x0.to_vec(),
        None => problem.default_start().to_vec(),
    };
    if !x.iter().all(|v| v.is_finite()) {
        return Err(SolveError::InvalidStart("start point is not finite".into()));
    }
    let started = Instant::now();
    let mut f = problem.residual(&x);
    let mut residual_evals = 1usize;
    if !f.iter().all(|v| v.is_finite()) {
        return Err(SolveError::InvalidStart(
            "residual is not finite at the start point".into(),
        ));
    }

    let mut trace = Vec::new();
    let mut scaling = ScalingDiagonal::zeros(n);
    let mut lambda = config.lambda0;
    let mut jacobian_evals = 0usize;
    let mut accepted_steps = 0usize;
    let mut passes = 0usize;
    let mut f_norm = norm2(&f);
    let mut res_inf;
    let mut f_trial = vec![0.0; m];
    let mut status = SolveStatus::MaxIterations;

    'outer: loop {
        res_inf = inf_norm(&f);
        if res_inf <= config.tol {
            status = SolveStatus::Converged;
            break;
        }
        if jacobian_evals >= config.maxit {
            break;
        }
        let jac = match evaluate_jacobian(problem, &x, &f, config.jacobian, config.fd_eps) {
            Some(Ok(eval)) if eval.matrix.is_finite() => {
                residual_evals += eval.function_evals_charged;
                eval.matrix
            }
            _ => {
                jacobian_evals += 1;
                status = SolveStatus::NonFiniteEncountered;
                break;
            }
        };
        jacobian_evals += 1;
        scaling = update_scaling(&scaling, &jac).expect("dimensions checked");
        let d = effective_scaling(&scaling);
        let mut refreshed = true;
        loop {
            let s = match lm_step(&jac, &f, &d, lambda) {
                Ok(s) => s,
                Err(_) => {
                    status = SolveStatus::RankDeficientJacobian;
                    break 'outer;
                }
            };
            passes += 1;
            let x_trial: Vec<f64> = x.iter().zip(&s).map(|(a, b)| a + b).collect();
            problem.residual_into(&x_trial, &mut f_trial);
            residual_evals += 1;
            let trial_norm = norm2(&f_trial);
            let accepted = trial_norm.is_finite() && trial_norm < f_norm;
            trace.push(IterationRecord {
                index: passes - 1,
                dt: lambda,
                rho: if trial_norm.is_finite() {
                    (f_norm - trial_norm) / f_norm
                } else {
                    -1.0
                },
                res_inf,
                step_norm: norm2(&s),
                accepted,
                jacobian_refreshed: refreshed,
            });
            refreshed = false;
            if accepted {
                x = x_trial;
                std::mem::swap(&mut f, &mut f_trial);
                f_norm = trial_norm;
                lambda *= config.lambda_down;
                accepted_steps += 1;
                break;
            }
            lambda *= config.lambda_up;
            if lambda > LAMBDA_MAX {
                break 'outer;
            }
        }
    }
    Ok(SolveOutcome {
        method: Method::LevenbergMarquardt,
        problem: problem.name().to_string(),
        m,
        n,
        status,
        x_final: x,
        res_inf_final: res_inf,
        iterations: jacobian_evals,
        accepted_steps,
        total_passes: passes,
        jacobian_evals,
        residual_evals,
        trace,
        iterates: Vec::new(),
        wall_time: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_variable_calculus_example() {
        let jac = DenseMatrix::from_rows(&[vec![1.0, 0.0]]);
        let s = lm_step(&jac, &[2.0], &ScalingDiagonal::ones(2), 1.0).unwrap();
        assert!((s[0] + 1.0).abs() < 1e-14 && s[1].abs() < 1e-14);
    }

    #[test]
    fn zero_damping_is_gauss_newton() {
        let jac = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let s = lm_step(&jac, &[1.0, 2.0], &ScalingDiagonal::ones(2), 0.0).unwrap();
        let r = jac.matvec(&s);
        assert!((r[0] + 1.0).abs() < 1e-14 && (r[1] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_damping_rank_deficient_is_singular() {
        let jac = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(
            lm_step(&jac, &[1.0, 1.0], &ScalingDiagonal::ones(2), 0.0),
            Err(LmError::SingularSystem)
        );
        let wide = DenseMatrix::from_rows(&[vec![1.0, 2.0]]);
        assert_eq!(
            lm_step(&wide, &[1.0], &ScalingDiagonal::ones(2), 0.0),
            Err(LmError::SingularSystem)
        );
    }

    #[test]
    fn large_damping_approaches_scaled_steepest_descent() {
        let jac = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let f = [1.0, -2.0];
        let lambda = 1e8;
        let s = lm_step(&jac, &f, &ScalingDiagonal::ones(2), lambda).unwrap();
        let g = jac.matvec_transposed(&f);
        for i in 0..2 {
            assert!((s[i] + g[i] / lambda).abs() < 1e-6 * norm2(&g) / lambda);
        }
        assert!(norm2(&s) < 1e-7);
    }

    #[test]
    fn scaling_examples() {
        let d = update_scaling(&ScalingDiagonal::zeros(3), &DenseMatrix::identity(3)).unwrap();
        assert_eq!(d.d, vec![1.0; 3]);
        let big = ScalingDiagonal { d: vec![5.0; 3] };
        assert_eq!(
            update_scaling(&big, &DenseMatrix::identity(3)).unwrap(),
            big
        );
        assert!(update_scaling(&big, &DenseMatrix::identity(2)).is_err());
    }

    #[test]
    fn affine_converges_in_one_step_once_damping_is_small() {
        let p = ProblemSpec::from_fn(
            "affine",
            2,
            2,
            |x, out| {
                out[0] = 2.0 * x[0] + x[1] - 1.0;
                out[1] = x[0] + 3.0 * x[1] + 2.0;
            },
            vec![1.0, 1.0],
        )
        .unwrap();
        let config = LMConfig {
            lambda0: 1e-12,
            ..LMConfig::default()
        };
        let out = lm_solve(&p, None, &config).unwrap();
        assert!(out.converged());
        assert_eq!(out.accepted_steps, 1);
        assert_eq!(out.method, Method::LevenbergMarquardt);
    }

    #[test]
    fn rosenbrock_from_classic_start() {
        let p = ProblemSpec::from_fn(
            "rosenbrock2",
            2,
            2,
            |x, out| {
                out[0] = 10.0 * (x[1] - x[0] * x[0]);
                out[1] = 1.0 - x[0];
            },
            vec![-1.2, 1.0],
        )
        .unwrap();
        let out = lm_solve(&p, None, &LMConfig::default()).unwrap();
        assert!(out.converged(), "{:?}", out.status);
        assert!((out.x_final[0] - 1.0).abs() < 1e-5 && (out.x_final[1] - 1.0).abs() < 1e-5);
        assert_eq!(out.jacobian_evals, out.iterations);
    }

    #[test]
    fn invalid_config_rejected() {
        let p = ProblemSpec::from_fn("id", 1, 1, |x, o| o[0] = x[0], vec![1.0]).unwrap();
        for bad in [
            LMConfig {
                lambda0: 0.0,
                ..LMConfig::default()
            },
            LMConfig {
                lambda_up: 1.0,
                ..LMConfig::default()
            },
            LMConfig {
                lambda_down: 1.0,
                ..LMConfig::default()
            },
        ] {
            assert!(matches!(
                lm_solve(&p, None, &bad),
                Err(SolveError::InvalidConfig(_))
            ));
        }
    }
}

//! The continuation Newton iteration with trust-region time stepping.
//!
//! Each iteration takes the damped minimum-norm step
//! `x + Δt/(1+Δt) · s^N` with `J s^N = −F`, measures how well the linear
//! model predicted the new residual norm, and adapts `Δt` from that ratio.
//! The Jacobian and its factorization are reused while the ratio stays close
//! to one.

use std::time::Instant;

use thiserror::Error;

use crate::linalg::{inf_norm, norm2, thin_qr_owned, LinalgError, ThinQR};
use crate::outcome::{IterationRecord, Method, SolveOutcome, SolveStatus};
use crate::problem::{evaluate_jacobian, JacobianMode, ProblemError, ProblemSpec};

/// Tunables of the iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Initial time step.
    pub dt0: f64,
    /// Acceptance floor for the ratio.
    pub eta_a: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// Enlargement factor.
    pub gamma1: f64,
    /// Shrink factor.
    pub gamma2: f64,
    /// Target for `‖F‖∞`.
    pub tol: f64,
    pub maxit: usize,
    pub fd_eps: f64,
    /// Upper clamp on the time step.
    pub dt_cap: f64,
    pub jacobian: JacobianMode,
    /// Keep every accepted iterate in [`SolveOutcome::iterates`].
    pub record_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt0: 1e-2,
            eta_a: 1e-6,
            eta1: 0.25,
            eta2: 0.75,
            gamma1: 2.0,
            gamma2: 0.5,
            tol: 1e-6,
            maxit: 400,
            fd_eps: 1e-6,
            dt_cap: 1e12,
            jacobian: JacobianMode::ForwardDifference,
            record_iterates: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |what: &str| Err(SolveError::InvalidConfig(what.to_string()));
        if !(self.eta1 > 0.0 && self.eta1 < self.eta2) {
            return bad("need 0 < eta1 < eta2");
        }
        if !(self.gamma1 > 1.0) {
            return bad("need gamma1 > 1");
        }
        if !(self.gamma2 > 0.0 && self.gamma2 < 1.0) {
            return bad("need 0 < gamma2 < 1");
        }
        if !(self.dt0 > 0.0 && self.dt0.is_finite()) {
            return bad("need dt0 > 0");
        }
        if !(self.tol > 0.0) {
            return bad("need tol > 0");
        }
        if self.maxit < 1 {
            return bad("need maxit >= 1");
        }
        if !(self.dt_cap >= self.dt0) {
            return bad("need dt_cap >= dt0");
        }
        if !(self.fd_eps > 0.0) {
            return bad("need fd_eps > 0");
        }
        if !self.eta_a.is_finite() {
            return bad("eta_a must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid start point: {0}")]
    InvalidStart(String),
    #[error("problem `{0}` has no analytic jacobian")]
    MissingJacobian(String),
    #[error("trust ratio undefined for a zero residual norm")]
    DegenerateRatio,
}

/// Thin QR of `Jᵀ` plus bookkeeping on how long it has been reused.
#[derive(Debug, Clone)]
pub struct FactorCache {
    pub qr: ThinQR,
    /// Point the Jacobian was evaluated at.
    pub base_point: Vec<f64>,
    /// Accepted steps taken since the factorization was computed.
    pub age: usize,
}

/// `dt/(1+dt) · s_newton`.
pub fn damped_step(s_newton: &[f64], dt: f64) -> Vec<f64> {
    let alpha = dt / (1.0 + dt);
    s_newton.iter().map(|v| alpha * v).collect()
}

/// Norm of the linear model `F + J s` after a damped step, `‖F‖/(1+dt)`.
pub fn predicted_model_norm(f_norm: f64, dt: f64) -> f64 {
    f_norm / (1.0 + dt)
}

/// Actual over predicted reduction of the Euclidean residual norm.
pub fn trust_ratio(f_norm_old: f64, f_norm_new: f64, dt: f64) -> Result<f64, SolveError> {
    if f_norm_old == 0.0 {
        return Err(SolveError::DegenerateRatio);
    }
    let predicted = dt / (1.0 + dt) * f_norm_old;
    Ok((f_norm_old - f_norm_new) / predicted)
}

/// Next time step from the ratio: grow when `|1−ρ| ≤ eta1`, keep when
/// `eta1 < |1−ρ| < eta2`, shrink otherwise. Clamped to `dt_cap`.
pub fn update_dt(dt: f64, rho: f64, config: &SolverConfig) -> f64 {
    let dev = (1.0 - rho).abs();
    let next = if dev <= config.eta1 {
        config.gamma1 * dt
    } else if dev < config.eta2 {
        dt
    } else {
        config.gamma2 * dt
    };
    next.min(config.dt_cap)
}

struct Counters {
    jacobian_evals: usize,
    residual_evals: usize,
}

enum FactorFailure {
    Rank,
    NonFinite,
}

fn factor_at(
    problem: &ProblemSpec,
    x: &[f64],
    f: &[f64],
    config: &SolverConfig,
    counters: &mut Counters,
) -> Result<FactorCache, FactorFailure> {
    let eval = match evaluate_jacobian(problem, x, f, config.jacobian, config.fd_eps) {
        Some(Ok(eval)) => eval,
        Some(Err(ProblemError::NonFiniteResidual { .. })) => {
            counters.jacobian_evals += 1;
            counters.residual_evals += problem.n();
            return Err(FactorFailure::NonFinite);
        }
        Some(Err(_)) | None => return Err(FactorFailure::NonFinite),
    };
    counters.jacobian_evals += 1;
    counters.residual_evals += eval.function_evals_charged;
    if !eval.matrix.is_finite() {
        return Err(FactorFailure::NonFinite);
    }
    let qr = thin_qr_owned(eval.matrix.transpose()).map_err(|_| FactorFailure::NonFinite)?;
    Ok(FactorCache {
        qr,
        base_point: x.to_vec(),
        age: 0,
    })
}

fn newton_step(cache: &FactorCache, f: &[f64]) -> Result<Vec<f64>, FactorFailure> {
    match cache.qr.min_norm_solve(f) {
        Ok(s) if s.iter().all(|v| v.is_finite()) => Ok(s),
        Ok(_) => Err(FactorFailure::NonFinite),
        Err(LinalgError::RankDeficientJacobian { .. }) => Err(FactorFailure::Rank),
        Err(_) => Err(FactorFailure::NonFinite),
    }
}

/// Solves `F(x) = 0` from `x0` (the problem's default start when `None`).
///
/// Configuration and start-point problems are reported as errors; numerical
/// breakdowns during the run end with a status in the returned outcome.
pub fn solve(
    problem: &ProblemSpec,
    x0: Option<&[f64]>,
    config: &SolverConfig,
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
    let mut counters = Counters {
        jacobian_evals: 0,
        residual_evals: 0,
    };
    let mut f = problem.residual(&x);
    counters.residual_evals += 1;
    if !f.iter().all(|v| v.is_finite()) {
        return Err(SolveError::InvalidStart(
            "residual is not finite at the start point".into(),
        ));
    }

    let mut trace = Vec::new();
    let mut iterates = Vec::new();
    if config.record_iterates {
        iterates.push(x.clone());
    }
    let mut itc = 0usize;
    let mut accepted_steps = 0usize;
    let mut passes = 0usize;
    let mut res_inf = inf_norm(&f);

    let finish = |status: SolveStatus,
                  x: Vec<f64>,
                  res_inf: f64,
                  itc: usize,
                  accepted_steps: usize,
                  passes: usize,
                  counters: &Counters,
                  trace: Vec<IterationRecord>,
                  iterates: Vec<Vec<f64>>| SolveOutcome {
        method: Method::Gcnmtr,
        problem: problem.name().to_string(),
        m,
        n,
        status,
        x_final: x,
        res_inf_final: res_inf,
        iterations: itc,
        accepted_steps,
        total_passes: passes,
        jacobian_evals: counters.jacobian_evals,
        residual_evals: counters.residual_evals,
        trace,
        iterates,
        wall_time: started.elapsed(),
    };

    let mut cache = match factor_at(problem, &x, &f, config, &mut counters) {
        Ok(c) => c,
        Err(e) => {
            let status = match e {
                FactorFailure::Rank => SolveStatus::RankDeficientJacobian,
                FactorFailure::NonFinite => SolveStatus::NonFiniteEncountered,
            };
            return Ok(finish(
                status, x, res_inf, 0, 0, 0, &counters, trace, iterates,
            ));
        }
    };
    let mut rho = 1.0f64;
    let mut dt = config.dt0;
    let mut success = true;
    let mut f_norm = norm2(&f);
    let mut s_newton: Vec<f64> = Vec::new();
    let mut x_trial = vec![0.0; n];
    let mut f_trial = vec![0.0; m];
    let pass_cap = config.maxit.saturating_mul(50);

    let mut status = SolveStatus::MaxIterations;
    while itc < config.maxit {
        let mut refreshed = false;
        if success {
            itc += 1;
            res_inf = inf_norm(&f);
            if res_inf <= config.tol {
                status = SolveStatus::Converged;
                break;
            }
            if (1.0 - rho).abs() > config.eta1 {
                match factor_at(problem, &x, &f, config, &mut counters) {
                    Ok(c) => cache = c,
                    Err(FactorFailure::Rank) => {
                        status = SolveStatus::RankDeficientJacobian;
                        break;
                    }
                    Err(FactorFailure::NonFinite) => {
                        status = SolveStatus::NonFiniteEncountered;
                        break;
                    }
                }
                refreshed = true;
            }
            s_newton = match newton_step(&cache, &f) {
                Ok(s) => s,
                Err(FactorFailure::Rank) => {
                    status = SolveStatus::RankDeficientJacobian;
                    break;
                }
                Err(FactorFailure::NonFinite) => {
                    status = SolveStatus::NonFiniteEncountered;
                    break;
                }
            };
        }
        if passes >= pass_cap {
            break;
        }
        passes += 1;

        let alpha = dt / (1.0 + dt);
        for ((xt, xi), si) in x_trial.iter_mut().zip(&x).zip(&s_newton) {
            *xt = xi + alpha * si;
        }
        problem.residual_into(&x_trial, &mut f_trial);
        counters.residual_evals += 1;
        let f_trial_norm = norm2(&f_trial);

        let model_norm = predicted_model_norm(f_norm, dt);
        rho = if !(f_norm >= model_norm) || !f_trial_norm.is_finite() {
            -1.0
        } else {
            trust_ratio(f_norm, f_trial_norm, dt).unwrap_or(-1.0)
        };
        let dt_used = dt;
        dt = update_dt(dt, rho, config);
        let accepted = rho >= config.eta_a;
        trace.push(IterationRecord {
            index: passes - 1,
            dt: dt_used,
            rho,
            res_inf,
            step_norm: alpha * norm2(&s_newton),
            accepted,
            jacobian_refreshed: refreshed,
        });
        if accepted {
            std::mem::swap(&mut x, &mut x_trial);
            std::mem::swap(&mut f, &mut f_trial);
            f_norm = f_trial_norm;
            cache.age += 1;
            accepted_steps += 1;
            if config.record_iterates {
                iterates.push(x.clone());
            }
        }
        success = accepted;
    }
    res_inf = inf_norm(&f);
    if status == SolveStatus::MaxIterations && res_inf <= config.tol {
        status = SolveStatus::Converged;
    }
    Ok(finish(
        status,
        x,
        res_inf,
        itc,
        accepted_steps,
        passes,
        &counters,
        trace,
        iterates,
    ))
}

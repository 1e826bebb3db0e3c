//! Solver results shared by the continuation solver and the baseline.

use std::fmt;
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Gcnmtr,
    LevenbergMarquardt,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Gcnmtr => "gcnmtr",
            Method::LevenbergMarquardt => "lm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    RankDeficientJacobian,
    NonFiniteEncountered,
}

/// One pass through the main loop.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Loop pass counter `k` (counts rejected retries too).
    pub index: usize,
    /// Time step used for the trial. For the Levenberg-Marquardt baseline
    /// this holds the damping parameter instead.
    pub dt: f64,
    pub rho: f64,
    /// `‖F(x_k)‖∞` at the iterate the trial started from.
    pub res_inf: f64,
    /// Euclidean norm of the trial step.
    pub step_norm: f64,
    pub accepted: bool,
    pub jacobian_refreshed: bool,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub method: Method,
    pub problem: String,
    pub m: usize,
    pub n: usize,
    pub status: SolveStatus,
    pub x_final: Vec<f64>,
    pub res_inf_final: f64,
    /// Iteration counter reported in benchmark tables. For the continuation
    /// solver this is the number of loop entries with an accepted previous
    /// trial, including the final convergence check.
    pub iterations: usize,
    pub accepted_steps: usize,
    pub total_passes: usize,
    pub jacobian_evals: usize,
    pub residual_evals: usize,
    pub trace: Vec<IterationRecord>,
    /// Accepted iterates starting with `x_0`; empty unless requested in the
    /// solver configuration.
    pub iterates: Vec<Vec<f64>>,
    pub wall_time: Duration,
}

impl SolveOutcome {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// `‖F‖∞` at each iterate an accepted trial started from.
    pub fn accepted_residuals(&self) -> Vec<f64> {
        self.trace
            .iter()
            .filter(|r| r.accepted)
            .map(|r| r.res_inf)
            .collect()
    }
}

/// One line of a benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub problem: String,
    pub m: usize,
    pub n: usize,
    pub solver: String,
    pub nj: usize,
    pub iterations: usize,
    pub time_s: f64,
    pub final_res_inf: f64,
    pub status: String,
}

impl TableRow {
    /// Row for a run that never produced an outcome.
    pub fn error(problem: &str, m: usize, n: usize, solver: Method) -> Self {
        Self {
            problem: problem.to_string(),
            m,
            n,
            solver: solver.label().to_string(),
            nj: 0,
            iterations: 0,
            time_s: 0.0,
            final_res_inf: f64::NAN,
            status: "error".to_string(),
        }
    }
}

/// Flattens an outcome into the benchmark-table schema.
///
/// Status is `ok` for converged runs, `failed` when the iteration budget ran
/// out, and `error` for breakdowns. A breakdown before the first iteration
/// reports zero counts.
pub fn trace_to_table(outcome: &SolveOutcome) -> TableRow {
    let status = match outcome.status {
        SolveStatus::Converged => "ok",
        SolveStatus::MaxIterations => "failed",
        SolveStatus::RankDeficientJacobian | SolveStatus::NonFiniteEncountered => "error",
    };
    let empty_failure = outcome.trace.is_empty() && !outcome.converged();
    TableRow {
        problem: outcome.problem.clone(),
        m: outcome.m,
        n: outcome.n,
        solver: outcome.method.label().to_string(),
        nj: if empty_failure {
            0
        } else {
            outcome.jacobian_evals
        },
        iterations: if empty_failure { 0 } else { outcome.iterations },
        time_s: outcome.wall_time.as_secs_f64(),
        final_res_inf: outcome.res_inf_final,
        status: if empty_failure { "error" } else { status }.to_string(),
    }
}

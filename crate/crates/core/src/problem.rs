//! Residual maps `F: Rⁿ → Rᵐ` and their Jacobians.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::DenseMatrix;

/// Residual evaluation: writes `F(x)` (length `m`) into the output slice.
pub type ResidualFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
/// Analytic Jacobian: writes the `m × n` Jacobian at `x` into the output matrix.
pub type JacobianFn = dyn Fn(&[f64], &mut DenseMatrix) + Send + Sync;
/// Gradient of a scalar objective: writes `∇f(x)` (length `n`).
pub type GradientFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("invalid dimension: {reason}")]
    InvalidDimension { reason: String },
    #[error("residual is not finite at column {column} of the finite-difference jacobian")]
    NonFiniteResidual { column: usize },
    #[error("residual is not finite at the start point")]
    NonFiniteStart,
    #[error("start point is already a root of the residual")]
    StartIsRoot,
    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),
}

/// A residual map together with its dimensions and default start point.
#[derive(Clone)]
pub struct ProblemSpec {
    name: String,
    m: usize,
    n: usize,
    residual: Arc<ResidualFn>,
    jacobian: Option<Arc<JacobianFn>>,
    default_start: Vec<f64>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("m", &self.m)
            .field("n", &self.n)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl ProblemSpec {
    /// Validates dimensions and the start point: `m ≤ n`, `F(x0)` finite and
    /// not identically zero.
    pub fn new(
        name: impl Into<String>,
        m: usize,
        n: usize,
        residual: Arc<ResidualFn>,
        default_start: Vec<f64>,
    ) -> Result<Self, ProblemError> {
        if m == 0 || n == 0 || m > n {
            return Err(ProblemError::InvalidDimension {
                reason: format!("need 1 <= m <= n, got m={m}, n={n}"),
            });
        }
        if default_start.len() != n {
            return Err(ProblemError::InvalidDimension {
                reason: format!(
                    "start point has {} entries, expected {n}",
                    default_start.len()
                ),
            });
        }
        let spec = Self {
            name: name.into(),
            m,
            n,
            residual,
            jacobian: None,
            default_start,
        };
        let f0 = spec.residual(&spec.default_start);
        if !f0.iter().all(|v| v.is_finite()) {
            return Err(ProblemError::NonFiniteStart);
        }
        if f0.iter().all(|&v| v == 0.0) {
            return Err(ProblemError::StartIsRoot);
        }
        Ok(spec)
    }

    /// Wraps a closure as a residual map.
    pub fn from_fn(
        name: impl Into<String>,
        m: usize,
        n: usize,
        residual: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        default_start: Vec<f64>,
    ) -> Result<Self, ProblemError> {
        Self::new(name, m, n, Arc::new(residual), default_start)
    }

    pub fn with_jacobian(mut self, jacobian: Arc<JacobianFn>) -> Self {
        self.jacobian = Some(jacobian);
        self
    }

    pub fn with_jacobian_fn(
        self,
        jacobian: impl Fn(&[f64], &mut DenseMatrix) + Send + Sync + 'static,
    ) -> Self {
        self.with_jacobian(Arc::new(jacobian))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of equations.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of unknowns.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn default_start(&self) -> &[f64] {
        &self.default_start
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.residual_into(x, &mut out);
        out
    }

    pub fn residual_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        (self.residual)(x, out);
    }

    /// Evaluates the analytic Jacobian, if the problem provides one.
    pub fn analytic_jacobian(&self, x: &[f64]) -> Option<JacobianEvaluation> {
        let jac = self.jacobian.as_ref()?;
        let mut matrix = DenseMatrix::zeros(self.m, self.n);
        jac(x, &mut matrix);
        Some(JacobianEvaluation {
            matrix,
            source: JacobianSource::Analytic,
            base_point: x.to_vec(),
            function_evals_charged: 0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianSource {
    Analytic,
    ForwardDifference,
}

#[derive(Debug, Clone)]
pub struct JacobianEvaluation {
    pub matrix: DenseMatrix,
    pub source: JacobianSource,
    pub base_point: Vec<f64>,
    /// Residual evaluations spent building the matrix.
    pub function_evals_charged: usize,
}

/// Forward-difference Jacobian reusing the residual already computed at `x`.
///
/// Column `i` is `(F(x + h eᵢ) − F(x)) / h` where `h` is the step actually
/// representable in floating point, `(xᵢ + eps) − xᵢ`. Costs exactly `n`
/// residual evaluations.
pub fn fd_jacobian(
    problem: &ProblemSpec,
    x: &[f64],
    f_at_x: &[f64],
    eps: f64,
) -> Result<JacobianEvaluation, ProblemError> {
    if !(eps > 0.0) {
        return Err(ProblemError::InvalidStep(eps));
    }
    let (m, n) = (problem.m(), problem.n());
    if x.len() != n || f_at_x.len() != m {
        return Err(ProblemError::InvalidDimension {
            reason: format!(
                "point has {} entries and residual {}, expected {n} and {m}",
                x.len(),
                f_at_x.len()
            ),
        });
    }
    let mut matrix = DenseMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for i in 0..n {
        let xi = x[i];
        xp[i] = xi + eps;
        let h = xp[i] - xi;
        let col = matrix.column_mut(i);
        problem.residual_into(&xp, col);
        xp[i] = xi;
        for (c, f0) in col.iter_mut().zip(f_at_x) {
            *c = (*c - f0) / h;
        }
        if !col.iter().all(|v| v.is_finite()) {
            return Err(ProblemError::NonFiniteResidual { column: i });
        }
    }
    Ok(JacobianEvaluation {
        matrix,
        source: JacobianSource::ForwardDifference,
        base_point: x.to_vec(),
        function_evals_charged: n,
    })
}

/// How a solver obtains Jacobians.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianMode {
    /// Forward differences, even when an analytic Jacobian exists.
    #[default]
    ForwardDifference,
    /// The problem's analytic Jacobian; solvers reject problems without one.
    Analytic,
}

/// Evaluates the Jacobian at `x` according to `mode`.
///
/// `f_at_x` must be the residual at `x`. Returns `None` when `mode` is
/// [`JacobianMode::Analytic`] and the problem has no analytic Jacobian.
pub fn evaluate_jacobian(
    problem: &ProblemSpec,
    x: &[f64],
    f_at_x: &[f64],
    mode: JacobianMode,
    eps: f64,
) -> Option<Result<JacobianEvaluation, ProblemError>> {
    match mode {
        JacobianMode::ForwardDifference => Some(fd_jacobian(problem, x, f_at_x, eps)),
        JacobianMode::Analytic => problem.analytic_jacobian(x).map(Ok),
    }
}

/// Residual made of the first `m` components of an `n`-dimensional gradient.
pub fn truncate_gradient(
    gradient: Arc<GradientFn>,
    n: usize,
    m: usize,
) -> Result<Arc<ResidualFn>, ProblemError> {
    if m == 0 || m > n {
        return Err(ProblemError::InvalidDimension {
            reason: format!("need 1 <= m <= n, got m={m}, n={n}"),
        });
    }
    if m == n {
        return Ok(Arc::new(move |x: &[f64], out: &mut [f64]| gradient(x, out)));
    }
    Ok(Arc::new(move |x: &[f64], out: &mut [f64]| {
        let mut g = vec![0.0; n];
        gradient(x, &mut g);
        out.copy_from_slice(&g[..out.len()]);
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(
        m: usize,
        n: usize,
        f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        x0: Vec<f64>,
    ) -> ProblemSpec {
        ProblemSpec::from_fn("test", m, n, f, x0).unwrap()
    }

    #[test]
    fn fd_bilinear_is_exact() {
        let p = spec(1, 2, |x, out| out[0] = x[0] * x[1], vec![1.0, 2.0]);
        let x = [1.0, 2.0];
        let f = p.residual(&x);
        let jac = fd_jacobian(&p, &x, &f, 1e-6).unwrap();
        assert_eq!(jac.matrix[(0, 0)], 2.0);
        assert_eq!(jac.matrix[(0, 1)], 1.0);
        assert_eq!(jac.function_evals_charged, 2);
        assert_eq!(jac.source, JacobianSource::ForwardDifference);
    }

    #[test]
    fn fd_identity_is_exact_anywhere() {
        let p = spec(3, 3, |x, out| out.copy_from_slice(x), vec![1.0; 3]);
        let x = [0.1, -7.3, 12345.678];
        let f = p.residual(&x);
        let jac = fd_jacobian(&p, &x, &f, 1e-6).unwrap();
        assert_eq!(jac.matrix, DenseMatrix::identity(3));
    }

    #[test]
    fn fd_square_picks_up_step() {
        let p = spec(1, 1, |x, out| out[0] = x[0] * x[0], vec![1.0]);
        let jac = fd_jacobian(&p, &[1.0], &[1.0], 1e-6).unwrap();
        assert!((jac.matrix[(0, 0)] - (2.0 + 1e-6)).abs() < 1e-9);
    }

    #[test]
    fn fd_reports_non_finite_column() {
        let p = spec(
            1,
            2,
            |x, out| out[0] = if x[1] > 1.0 { f64::INFINITY } else { x[0] },
            vec![1.0, 1.0],
        );
        let err = fd_jacobian(&p, &[1.0, 1.0], &[1.0], 1e-6).unwrap_err();
        assert_eq!(err, ProblemError::NonFiniteResidual { column: 1 });
    }

    #[test]
    fn fd_rejects_bad_step() {
        let p = spec(1, 1, |x, out| out[0] = x[0], vec![1.0]);
        assert!(matches!(
            fd_jacobian(&p, &[1.0], &[1.0], 0.0),
            Err(ProblemError::InvalidStep(_))
        ));
    }

    #[test]
    fn validates_dimensions_and_start() {
        let id = |x: &[f64], out: &mut [f64]| out.copy_from_slice(&x[..out.len()]);
        assert!(matches!(
            ProblemSpec::from_fn("wide", 3, 2, id, vec![1.0; 2]),
            Err(ProblemError::InvalidDimension { .. })
        ));
        assert_eq!(
            ProblemSpec::from_fn("root", 2, 2, id, vec![0.0; 2]).unwrap_err(),
            ProblemError::StartIsRoot
        );
        assert_eq!(
            ProblemSpec::from_fn("nan", 1, 1, |_, out| out[0] = f64::NAN, vec![1.0]).unwrap_err(),
            ProblemError::NonFiniteStart
        );
    }

    #[test]
    fn truncation_keeps_leading_components() {
        let grad: Arc<GradientFn> = Arc::new(|x: &[f64], g: &mut [f64]| {
            for (i, (gi, xi)) in g.iter_mut().zip(x).enumerate() {
                *gi = (i as f64 + 1.0) * xi;
            }
        });
        let x = [1.0, 1.0, 1.0, 1.0];
        let full = truncate_gradient(grad.clone(), 4, 4).unwrap();
        let mut out = vec![0.0; 4];
        full(&x, &mut out);
        assert_eq!(out, vec![1.0, 2.0, 3.0, 4.0]);

        let single = truncate_gradient(grad.clone(), 4, 1).unwrap();
        let mut out = vec![0.0; 1];
        single(&x, &mut out);
        assert_eq!(out, vec![1.0]);

        assert!(matches!(
            truncate_gradient(grad, 4, 5),
            Err(ProblemError::InvalidDimension { .. })
        ));
    }
}

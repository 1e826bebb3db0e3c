//! Benchmark problems built from classical test functions.
//!
//! Each problem keeps the leading `m` components of a square map `G: Rⁿ → Rⁿ`,
//! so `m = n` gives a determined system and `m < n` an underdetermined one.
//! `G` is either the gradient of an unconstrained objective or, for problems
//! that come from collections of nonlinear systems, the system itself.
//! Formulas and their sources are listed in the guide's test-problem chapter.

use std::sync::Arc;

use crate::linalg::DenseMatrix;
use crate::problem::{truncate_gradient, GradientFn, ProblemError, ProblemSpec};

/// A smooth scalar objective with an analytic gradient.
pub trait Objective: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64], g: &mut [f64]);

    /// Calls `set(j, H_ij)` for the nonzero entries of Hessian row `i`.
    /// Returns `false` when no analytic Hessian is available.
    fn hessian_row(&self, _x: &[f64], _i: usize, _set: &mut dyn FnMut(usize, f64)) -> bool {
        false
    }

    fn has_hessian(&self) -> bool {
        false
    }

    /// A known unconstrained minimizer for dimension `n`, if there is a closed form.
    fn minimizer(&self, _n: usize) -> Option<Vec<f64>> {
        None
    }
}

/// A square nonlinear system `G: Rⁿ → Rⁿ` given directly.
pub trait System: Send + Sync {
    fn eval(&self, x: &[f64], out: &mut [f64]);

    /// Calls `set(j, ∂Gᵢ/∂xⱼ)` for the nonzero entries of row `i`.
    fn jacobian_row(&self, x: &[f64], i: usize, set: &mut dyn FnMut(usize, f64));

    /// A known root for dimension `n`, if there is a closed form.
    fn root(&self, _n: usize) -> Option<Vec<f64>> {
        None
    }
}

/// Where a problem's square map comes from.
#[derive(Clone)]
pub enum Source {
    Gradient(Arc<dyn Objective>),
    System(Arc<dyn System>),
}

/// Metadata for a registered problem.
#[derive(Clone, Copy)]
pub struct ProblemEntry {
    pub name: &'static str,
    pub title: &'static str,
    /// Variables must come in blocks of this size (`n % block == 0`).
    pub block: usize,
    pub min_n: usize,
    /// Member of the mandatory benchmark set.
    pub core: bool,
    make: fn() -> Source,
}

impl ProblemEntry {
    pub fn source(&self) -> Source {
        (self.make)()
    }

    /// The objective, for gradient-based problems.
    pub fn objective(&self) -> Option<Arc<dyn Objective>> {
        match self.source() {
            Source::Gradient(obj) => Some(obj),
            Source::System(_) => None,
        }
    }
}

macro_rules! entry {
    ($name:literal, $title:literal, $block:expr, $min_n:expr, $core:expr, grad $ty:ident) => {
        entry!(@ $name, $title, $block, $min_n, $core, Source::Gradient(Arc::new($ty)))
    };
    ($name:literal, $title:literal, $block:expr, $min_n:expr, $core:expr, sys $ty:ident) => {
        entry!(@ $name, $title, $block, $min_n, $core, Source::System(Arc::new($ty)))
    };
    (@ $name:literal, $title:literal, $block:expr, $min_n:expr, $core:expr, $make:expr) => {
        ProblemEntry {
            name: $name,
            title: $title,
            block: $block,
            min_n: $min_n,
            core: $core,
            make: || $make,
        }
    };
}

static ENTRIES: &[ProblemEntry] = &[
    entry!("trid", "Trid", 1, 2, true, grad Trid),
    entry!("griewank", "Griewank", 1, 1, true, grad Griewank),
    entry!("dixon-price", "Dixon-Price", 1, 2, true, grad DixonPrice),
    entry!("rosenbrock", "Rosenbrock", 1, 2, true, grad ChainedRosenbrock),
    entry!("trigonometric", "Trigonometric", 1, 1, true, grad Trigonometric),
    entry!("singular-broyden", "Singular Broyden", 1, 2, true, sys SingularBroyden),
    entry!("powell-singular", "Extended Powell Singular", 4, 4, true, sys ExtendedPowellSingular),
    entry!("tridiagonal-system", "Tridiagonal System", 1, 2, false, sys TridiagonalSystem),
    entry!("discrete-boundary-value", "Discrete Boundary-Value", 1, 1, true, sys DiscreteBoundaryValue),
    entry!("broyden-tridiagonal", "Broyden Tridiagonal", 1, 2, true, sys BroydenTridiagonal),
    entry!("wood", "Extended Wood", 4, 4, true, grad ExtendedWood),
    entry!("cliff", "Extended Cliff", 2, 2, false, grad ExtendedCliff),
    entry!("hiebert", "Extended Hiebert", 2, 2, false, grad ExtendedHiebert),
    entry!("maratos", "Extended Maratos", 2, 2, false, grad ExtendedMaratos),
    entry!("psc1", "Extended PSC1", 2, 2, false, grad ExtendedPsc1),
    entry!("qp1", "Extended Quadratic Penalty QP1", 1, 2, false, grad QuadraticPenalty1),
    entry!("qp2", "Extended Quadratic Penalty QP2", 1, 2, false, grad QuadraticPenalty2),
    entry!("tet", "Extended Three Exponential Terms", 2, 2, false, grad ExtendedTet),
    entry!("eg2", "EG2", 1, 2, false, grad Eg2),
    entry!("bd1", "Extended Block Diagonal BD1", 2, 2, false, grad ExtendedBd1),
    entry!("extended-rosenbrock", "Extended Rosenbrock (pairs)", 2, 2, false, grad ExtendedRosenbrock),
];

/// All registered problems, in benchmark-table order.
pub fn entries() -> &'static [ProblemEntry] {
    ENTRIES
}

pub fn entry(name: &str) -> Option<&'static ProblemEntry> {
    ENTRIES.iter().find(|e| e.name == name)
}

/// Names of the mandatory benchmark set.
pub fn core_names() -> Vec<&'static str> {
    ENTRIES.iter().filter(|e| e.core).map(|e| e.name).collect()
}

pub fn names() -> Vec<&'static str> {
    ENTRIES.iter().map(|e| e.name).collect()
}

/// Checks that `(m, n)` is admissible for the named problem.
pub fn validate_dims(
    name: &str,
    m: usize,
    n: usize,
) -> Result<&'static ProblemEntry, ProblemError> {
    let e = entry(name).ok_or_else(|| ProblemError::UnknownProblem(name.to_string()))?;
    if n < e.min_n {
        return Err(ProblemError::InvalidDimension {
            reason: format!("{name} needs n >= {}, got {n}", e.min_n),
        });
    }
    if n % e.block != 0 {
        return Err(ProblemError::InvalidDimension {
            reason: format!("{name} needs n divisible by {}, got {n}", e.block),
        });
    }
    if m == 0 || m > n {
        return Err(ProblemError::InvalidDimension {
            reason: format!("need 1 <= m <= n, got m={m}, n={n}"),
        });
    }
    Ok(e)
}

/// Builds problem `name` with `m` equations in `n` unknowns.
///
/// The default start is all ones, or all twos when all ones is a root.
pub fn registry_lookup(name: &str, m: usize, n: usize) -> Result<ProblemSpec, ProblemError> {
    let e = validate_dims(name, m, n)?;
    let source = e.source();
    let full: Arc<GradientFn> = match &source {
        Source::Gradient(obj) => {
            let obj = obj.clone();
            Arc::new(move |x: &[f64], g: &mut [f64]| obj.gradient(x, g))
        }
        Source::System(sys) => {
            let sys = sys.clone();
            Arc::new(move |x: &[f64], g: &mut [f64]| sys.eval(x, g))
        }
    };
    let residual = truncate_gradient(full, n, m)?;

    let mut spec = match ProblemSpec::new(name, m, n, residual.clone(), vec![1.0; n]) {
        Err(ProblemError::StartIsRoot) => ProblemSpec::new(name, m, n, residual, vec![2.0; n])?,
        other => other?,
    };
    match source {
        Source::Gradient(obj) if obj.has_hessian() => {
            spec = spec.with_jacobian_fn(move |x: &[f64], out: &mut DenseMatrix| {
                out.fill(0.0);
                for i in 0..out.rows() {
                    obj.hessian_row(x, i, &mut |j, v| out[(i, j)] = v);
                }
            });
        }
        Source::System(sys) => {
            spec = spec.with_jacobian_fn(move |x: &[f64], out: &mut DenseMatrix| {
                out.fill(0.0);
                for i in 0..out.rows() {
                    sys.jacobian_row(x, i, &mut |j, v| out[(i, j)] = v);
                }
            });
        }
        Source::Gradient(_) => {}
    }
    Ok(spec)
}

// ---------------------------------------------------------------------------
// Objectives. Indices in comments are 1-based to match the usual statements of
// these functions; code is 0-based.

/// Σ (xᵢ − 1)² − Σ_{i≥2} xᵢ xᵢ₋₁
pub struct Trid;

impl Objective for Trid {
    fn value(&self, x: &[f64]) -> f64 {
        let sq: f64 = x.iter().map(|v| (v - 1.0).powi(2)).sum();
        let cross: f64 = x.windows(2).map(|w| w[0] * w[1]).sum();
        sq - cross
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let left = if i > 0 { x[i - 1] } else { 0.0 };
            let right = if i + 1 < n { x[i + 1] } else { 0.0 };
            g[i] = 2.0 * (x[i] - 1.0) - left - right;
        }
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn hessian_row(&self, x: &[f64], i: usize, set: &mut dyn FnMut(usize, f64)) -> bool {
        set(i, 2.0);
        if i > 0 {
            set(i - 1, -1.0);
        }
        if i + 1 < x.len() {
            set(i + 1, -1.0);
        }
        true
    }

    fn minimizer(&self, n: usize) -> Option<Vec<f64>> {
        Some((1..=n).map(|i| (i * (n + 1 - i)) as f64).collect())
    }
}

/// 1 + Σ xᵢ²/4000 − Π cos(xᵢ/√i)
pub struct Griewank;

impl Objective for Griewank {
    fn value(&self, x: &[f64]) -> f64 {
        let sum: f64 = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
        let prod: f64 = x
            .iter()
            .enumerate()
            .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
            .product();
        sum - prod + 1.0
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let n = x.len();
        let cos: Vec<f64> = (0..n)
            .map(|i| (x[i] / ((i + 1) as f64).sqrt()).cos())
            .collect();
        // Product of all cosines except index i, via prefix/suffix products.
        let mut suffix = vec![1.0; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] * cos[i];
        }
        let mut prefix = 1.0;
        for i in 0..n {
            let root = ((i + 1) as f64).sqrt();
            let others = prefix * suffix[i + 1];
            g[i] = x[i] / 2000.0 + (x[i] / root).sin() / root * others;
            prefix *= cos[i];
        }
    }

    fn minimizer(&self, n: usize) -> Option<Vec<f64>> {
        Some(vec![0.0; n])
    }
}

/// (x₁ − 1)² + Σ_{i≥2} i (2xᵢ² − xᵢ₋₁)²
pub struct DixonPrice;

impl DixonPrice {
    fn t(x: &[f64], i: usize) -> f64 {
        2.0 * x[i] * x[i] - x[i - 1]
    }
}

impl Objective for DixonPrice {
    fn value(&self, x: &[f64]) -> f64 {
        let head = (x[0] - 1.0).powi(2);
        head + (1..x.len())
            .map(|i| (i + 1) as f64 * Self::t(x, i).powi(2))
            .sum::<f64>()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let own = if i == 0 {
                2.0 * (x[0] - 1.0)
            } else {
                8.0 * (i + 1) as f64 * x[i] * Self::t(x, i)
            };
            let next = if i + 1 < n {
                -2.0 * (i + 2) as f64 * Self::t(x, i + 1)
            } else {
                0.0
            };
            g[i] = own + next;
        }
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn hessian_row(&self, x: &[f64], i: usize, set: &mut dyn FnMut(usize, f64)) -> bool {
        let n = x.len();
        let w = (i + 1) as f64;
        let mut diag = if i == 0 {
            2.0
        } else {
            set(i - 1, -8.0 * w * x[i]);
            8.0 * w * Self::t(x, i) + 32.0 * w * x[i] * x[i]
        };
        if i + 1 < n {
            diag += 2.0 * (w + 1.0);
            set(i + 1, -8.0 * (w + 1.0) * x[i + 1]);
        }
        set(i, diag);
        true
    }

    fn minimizer(&self, n: usize) -> Option<Vec<f64>> {
        // x_i = 2^{-(2^i - 2)/2^i} = 2^{-(1 - 2^{1-i})}
        Some(
            (1..=n)
                .map(|i| 2f64.powf(-(1.0 - 2f64.powi(1 - i as i32))))
                .collect(),
        )
    }
}

/// Σ over pairs 100(x₂ᵢ − x₂ᵢ₋₁²)² + (1 − x₂ᵢ₋₁)²
pub struct ExtendedRosenbrock;

impl Objective for ExtendedRosenbrock {
    fn value(&self, x: &[f64]) -> f64 {
        x.chunks_exact(2)
            .map(|p| 100.0 * (p[1] - p[0] * p[0]).powi(2) + (1.0 - p[0]).powi(2))
            .sum()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        for (p, gp) in x.chunks_exact(2).zip(g.chunks_exact_mut(2)) {
            let d = p[1] - p[0] * p[0];
            gp[0] = -400.0 * p[0] * d - 2.0 * (1.0 - p[0]);
            gp[1] = 200.0 * d;
        }
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn hessian_row(&self, x: &[f64], i: usize, set: &mut dyn FnMut(usize, f64)) -> bool {
        let j = i - i % 2;
        let (a, b) = (x[j], x[j + 1]);
        if i == j {
            set(j, 1200.0 * a * a - 400.0 * b + 2.0);
            set(j + 1, -400.0 * a);
        } else {
            set(j, -400.0 * a);
            set(j + 1, 200.0);
        }
        true
    }

    fn minimizer(&self, n: usize) -> Option<Vec<f64>> {
        Some(vec![1.0; n])
    }
}

/// Σ_{i<n} 100(xᵢ₊₁ − xᵢ²)² + (1 − xᵢ)²
pub struct ChainedRosenbrock;

impl Objective for ChainedRosenbrock {
    fn value(&self, x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let mut gi = 0.0;
            if i + 1 < n {
                gi += -400.0 * x[i] * (x[i + 1] - x[i] * x[i]) - 2.0 * (1.0 - x[i]);
            }
            if i > 0 {
                gi += 200.0 * (x[i] - x[i - 1] * x[i - 1]);
            }
            g[i] = gi;
        }
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn hessian_row(&self, x: &[f64], i: usize, set: &mut dyn FnMut(usize, f64)) -> bool {
        let n = x.len();
        let mut diag = 0.0;
        if i + 1 < n {
            diag += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
            set(i + 1, -400.0 * x[i]);
        }
        if i > 0 {
            diag += 200.0;
            set(i - 1, -400.0 * x[i - 1]);
        }
        set(i, diag);
        true
    }

    fn minimizer(&self, n: usize) -> Option<Vec<f64>> {
        Some(vec![1.0; n])
    }
}

/// Σ Fᵢ², Fᵢ = n − Σⱼ cos xⱼ + i(1 − cos xᵢ) − sin xᵢ
pub struct Trigonometric;

impl Trigonometric {
    fn residuals(x: &[f64]) -> Vec<f64> {
        let n = x.len() as f64;
        let cos_sum: f64 = x.iter().map(|v| v.cos()).sum();
        x.iter()
            .enumerate()
            .map(|(i, v)| n - cos_sum + (i + 1) as f64 * (1.0 - v.cos()) - v.sin())
            .collect()
    }
}

impl Objective for Trigonometric {
    fn value(&self, x: &[f64]) -> f64 {
        Self::residuals(x).iter().map(|r| r * r).sum()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let r = Self::residuals(x);
        let r_sum: f64 = r.iter().sum();
        for (k, gk) in g.iter_mut().enumerate() {
            let (s, c) = x[k].sin_cos();
            *gk = 2.0 * (s * r_sum + r[k] * ((k + 1) as f64 * s - c));
        }
    }

    fn minimizer(&self, n: usize) -> Option<Vec<f64>> {
        Some(vec![0.0; n])
    }
}

/// Broyden tridiagonal residual rᵢ = (3 − 2xᵢ)xᵢ − xᵢ₋₁ − 2xᵢ₊₁ + 1, x₀ = xₙ₊₁ = 0.
fn broyden_residual(x: &[f64], i: usize) -> f64 {
    let left = if i > 0 { x[i - 1] } else { 0.0 };
    let right = if i + 1 < x.len() { x[i + 1] } else { 0.0 };
    (3.0 - 2.0 * x[i]) * x[i] - left - 2.0 * right + 1.0
}

fn broyden_row(x: &[f64], i: usize, scale: f64, set: &mut dyn FnMut(usize, f64)) {
    if i > 0 {
        set(i - 1, -scale);
    }
    set(i, scale * (3.0 - 4.0 * x[i]));
    if i + 1 < x.len() {
        set(i + 1, -2.0 * scale);
    }
}

/// Gᵢ = (3 − 2xᵢ)xᵢ − xᵢ₋₁ − 2xᵢ₊₁ + 1
pub struct BroydenTridiagonal;

impl System for BroydenTridiagonal {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = broyden_residual(x, i);
        }
    }

    fn jacobian_row(&self, x: &[f64], i: usize, set: &mut dyn FnMut(usize, f64)) {
        broyden_row(x, i, 1.0, set);
    }
}

/// Gᵢ = ((3 − 2xᵢ)xᵢ − xᵢ₋₁ − 2xᵢ₊₁ + 1)², singular at every root.
pub struct SingularBroyden;

impl System for SingularBroyden {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = broyden_residual(x, i).powi(2);
        }
    }

    fn jacobian_row(&self, x: &[f64], i: usize, set: &mut dyn FnMut(usize, f64)) {
        broyden_row(x, i, 2.0 * broyden_residual(x, i), set);
    }
}

/// Blocks of four:
/// x₁ + 10x₂, √5(x₃ − x₄), (x₂ − 2x₃)², √10(x₁ − x₄)²
pub struct ExtendedPowellSingular;

impl System for ExtendedPowellSingular {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (b, o) in x.chunks_exact(4).zip(out.chunks_exact_mut(4)) {
            o[0] = b[0] + 10.0 * b[1];
            o[1] = 5f64.sqrt() * (b[2] - b[3]);
            o[2] = (b[1] - 2.0 * b[2]).powi(2);
            o[3] = 10f64.sqrt() * (b[0] - b[3]).powi(2);
        }
    }

    fn jacobian_row(&self, x: &[f64], i: usize, set: &mut dyn FnMut(usize, f64)) {
        let j = i - i % 4;
        let b = &x[j..j + 4];
        match i % 4 {
            0 => {
                set(j, 1.0);
                set(j + 1, 10.0);
            }
            1 => {
                set(j + 2, 5f64.sqrt());
                set(j + 3, -(5f64.sqrt()));
            }
            2 => {
                let t = 2.0 * (b[1] - 2.0 * b[2]);
                set(j + 1, t);
                set(j + 2, -2.0 * t);
            }
            _ => {
                let t = 2.0 * 10f64.sqrt() * (b[0] - b[3]);
                set(j, t);
                set(j + 3, -t);
            }
        }
    }

    fn root(&self, n: usize) -> Option<Vec<f64>> {
        Some(vec![0.0; n])
    }
}

/// G₁ = 4(x₁ − x₂²),
/// Gᵢ = 8xᵢ(xᵢ² − xᵢ₋₁) − 2(1 − xᵢ) + 4(xᵢ − xᵢ₊₁²),
/// Gₙ = 8xₙ(xₙ² − xₙ₋₁) − 2(1 − xₙ).
pub struct TridiagonalSystem;

impl System for TridiagonalSystem {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        for (i, o) in out.iter_mut().enumerate() {
            let mut r = 0.0;
            if i > 0 {
                r += 8.0 * x[i] * (x[i] * x[i] - x[i - 1]) - 2.0 * (1.0 - x[i]);
            }
            if i + 1 < n {
                r += 4.0 * (x[i] - x[i + 1] * x[i + 1]);
            }
            *o = r;
        }
    }

    fn jacobian_row(&self, x: &[f64], i: usize, set: &mut dyn FnMut(usize, f64)) {
        let n = x.len();
        let mut own = 0.0;
        if i > 0 {
            own += 24.0 * x[i] * x[i] - 8.0 * x[i - 1] + 2.0;
            set(i - 1, -8.0 * x[i]);
        }
        if i + 1 < n {
            own += 4.0;
            set(i + 1, -8.0 * x[i + 1]);
        }
        set(i, own);
    }

    fn root(&self, n: usize) -> Option<Vec<f64>> {
        Some(vec![1.0; n])
    }
}

/// Gᵢ = 2xᵢ − xᵢ₋₁ − xᵢ₊₁ + h²(xᵢ + tᵢ + 1)³/2, h = 1/(n+1), tᵢ = ih, x₀ = xₙ₊₁ = 0
pub struct DiscreteBoundaryValue;

impl System for DiscreteBoundaryValue {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        let h = 1.0 / (n as f64 + 1.0);
        for (i, o) in out.iter_mut().enumerate() {
            let t = (i + 1) as f64 * h;
            let left = if i > 0 { x[i - 1] } else { 0.0 };
            let right = if i + 1 < n { x[i + 1] } else { 0.0 };
            *o = 2.0 * x[i] - left - right + h * h * (x[i] + t + 1.0).powi(3) / 2.0;
        }
    }

    fn jacobian_row(&self, x: &[f64], i: usize, set: &mut dyn FnMut(usize, f64)) {
        let n = x.len();
        let h = 1.0 / (n as f64 + 1.0);
        let t = (i + 1) as f64 * h;
        if i > 0 {
            set(i - 1, -1.0);
        }
        set(i, 2.0 + 1.5 * h * h * (x[i] + t + 1.0).powi(2));
        if i + 1 < n {
            set(i + 1, -1.0);
        }
    }
}

/// Blocks of four:
/// 100(x₁² − x₂)² + (x₁ − 1)² + 90(x₃² − x₄)² + (x₃ − 1)²
/// + 10.1((x₂ − 1)² + (x₄ − 1)²) + 19.8(x₂ − 1)(x₄ − 1)
pub struct ExtendedWood;

impl Objective for ExtendedWood {
    fn value(&self, x: &[f64]) -> f64 {
        x.chunks_exact(4)
            .map(|b| {
                100.0 * (b[0] * b[0] - b[1]).powi(2)
                    + (b[0] - 1.0).powi(2)
                    + 90.0 * (b[2] * b[2] - b[3]).powi(2)
                    + (b[2] - 1.0).powi(2)
                    + 10.1 * ((b[1] - 1.0).powi(2) + (b[3] - 1.0).powi(2))
                    + 19.8 * (b[1] - 1.0) * (b[3] - 1.0)
            })
            .sum()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        for (b, gb) in x.chunks_exact(4).zip(g.chunks_exact_mut(4)) {
            let p = b[0] * b[0] - b[1];
            let q = b[2] * b[2] - b[3];
            gb[0] = 400.0 * b[0] * p + 2.0 * (b[0] - 1.0);
            gb[1] = -200.0 * p + 20.2 * (b[1] - 1.0) + 19.8 * (b[3] - 1.0);
            gb[2] = 360.0 * b[2] * q + 2.0 * (b[2] - 1.0);
            gb[3] = -180.0 * q + 20.2 * (b[3] - 1.0) + 19.8 * (b[1] - 1.0);
        }
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn hessian_row(&self, x: &[f64], i: usize, set: &mut dyn FnMut(usize, f64)) -> bool {
        let j = i - i % 4;
        let b = &x[j..j + 4];
        let row: [f64; 4] = match i % 4 {
            0 => [
                1200.0 * b[0] * b[0] - 400.0 * b[1] + 2.0,
                -400.0 * b[0],
                0.0,
                0.0,
            ],
            1 => [-400.0 * b[0], 220.2, 0.0, 19.8],
            2 => [
                0.0,
                0.0,
                1080.0 * b[2] * b[2] - 360.0 * b[3] + 2.0,
                -360.0 * b[2],
            ],
            _ => [0.0, 19.8, -360.0 * b[2], 200.2],
        };
        for (k, v) in row.iter().enumerate() {
            set(j + k, *v);
        }
        true
    }

    fn minimizer(&self, n: usize) -> Option<Vec<f64>> {
        Some(vec![1.0; n])
    }
}

/// Pairs: ((a − 3)/100)² − (a − b) + exp(20(a − b))
pub struct ExtendedCliff;

impl Objective for ExtendedCliff {
    fn value(&self, x: &[f64]) -> f64 {
        x.chunks_exact(2)
            .map(|p| ((p[0] - 3.0) / 100.0).powi(2) - (p[0] - p[1]) + (20.0 * (p[0] - p[1])).exp())
            .sum()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        for (p, gp) in x.chunks_exact(2).zip(g.chunks_exact_mut(2)) {
            let e = 20.0 * (20.0 * (p[0] - p[1])).exp();
            gp[0] = 2.0 * (p[0] - 3.0) / 10000.0 - 1.0 + e;
            gp[1] = 1.0 - e;
        }
    }
}

/// Pairs: (a − 10)² + (ab − 50000)²
pub struct ExtendedHiebert;

impl Objective for ExtendedHiebert {
    fn value(&self, x: &[f64]) -> f64 {
        x.chunks_exact(2)
            .map(|p| (p[0] - 10.0).powi(2) + (p[0] * p[1] - 50000.0).powi(2))
            .sum()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        for (p, gp) in x.chunks_exact(2).zip(g.chunks_exact_mut(2)) {
            let r = p[0] * p[1] - 50000.0;
            gp[0] = 2.0 * (p[0] - 10.0) + 2.0 * p[1] * r;
            gp[1] = 2.0 * p[0] * r;
        }
    }
}

/// Pairs: a + 100(a² + b² − 1)²
pub struct ExtendedMaratos;

impl Objective for ExtendedMaratos {
    fn value(&self, x: &[f64]) -> f64 {
        x.chunks_exact(2)
            .map(|p| p[0] + 100.0 * (p[0] * p[0] + p[1] * p[1] - 1.0).powi(2))
            .sum()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        for (p, gp) in x.chunks_exact(2).zip(g.chunks_exact_mut(2)) {
            let r = p[0] * p[0] + p[1] * p[1] - 1.0;
            gp[0] = 1.0 + 400.0 * p[0] * r;
            gp[1] = 400.0 * p[1] * r;
        }
    }
}

/// Pairs: (a² + b² + ab)² + sin²a + cos²b
pub struct ExtendedPsc1;

impl Objective for ExtendedPsc1 {
    fn value(&self, x: &[f64]) -> f64 {
        x.chunks_exact(2)
            .map(|p| {
                (p[0] * p[0] + p[1] * p[1] + p[0] * p[1]).powi(2)
                    + p[0].sin().powi(2)
                    + p[1].cos().powi(2)
            })
            .sum()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        for (p, gp) in x.chunks_exact(2).zip(g.chunks_exact_mut(2)) {
            let q = p[0] * p[0] + p[1] * p[1] + p[0] * p[1];
            gp[0] = 2.0 * q * (2.0 * p[0] + p[1]) + 2.0 * p[0].sin() * p[0].cos();
            gp[1] = 2.0 * q * (2.0 * p[1] + p[0]) - 2.0 * p[1].cos() * p[1].sin();
        }
    }
}

/// Σ_{i<n} (xᵢ² − 2)² + (Σ xᵢ² − 0.5)²
pub struct QuadraticPenalty1;

impl Objective for QuadraticPenalty1 {
    fn value(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let s: f64 = x.iter().map(|v| v * v).sum();
        x[..n - 1]
            .iter()
            .map(|v| (v * v - 2.0).powi(2))
            .sum::<f64>()
            + (s - 0.5).powi(2)
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let n = x.len();
        let s: f64 = x.iter().map(|v| v * v).sum();
        for i in 0..n {
            let own = if i + 1 < n {
                4.0 * x[i] * (x[i] * x[i] - 2.0)
            } else {
                0.0
            };
            g[i] = own + 4.0 * x[i] * (s - 0.5);
        }
    }
}

/// Σ_{i<n} (xᵢ² − sin xᵢ)² + (Σ xᵢ² − 100)²
pub struct QuadraticPenalty2;

impl Objective for QuadraticPenalty2 {
    fn value(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let s: f64 = x.iter().map(|v| v * v).sum();
        x[..n - 1]
            .iter()
            .map(|v| (v * v - v.sin()).powi(2))
            .sum::<f64>()
            + (s - 100.0).powi(2)
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let n = x.len();
        let s: f64 = x.iter().map(|v| v * v).sum();
        for i in 0..n {
            let own = if i + 1 < n {
                2.0 * (x[i] * x[i] - x[i].sin()) * (2.0 * x[i] - x[i].cos())
            } else {
                0.0
            };
            g[i] = own + 4.0 * x[i] * (s - 100.0);
        }
    }
}

/// Pairs: exp(a + 3b − 0.1) + exp(a − 3b − 0.1) + exp(−a − 0.1)
pub struct ExtendedTet;

impl Objective for ExtendedTet {
    fn value(&self, x: &[f64]) -> f64 {
        x.chunks_exact(2)
            .map(|p| {
                (p[0] + 3.0 * p[1] - 0.1).exp()
                    + (p[0] - 3.0 * p[1] - 0.1).exp()
                    + (-p[0] - 0.1).exp()
            })
            .sum()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        for (p, gp) in x.chunks_exact(2).zip(g.chunks_exact_mut(2)) {
            let e1 = (p[0] + 3.0 * p[1] - 0.1).exp();
            let e2 = (p[0] - 3.0 * p[1] - 0.1).exp();
            let e3 = (-p[0] - 0.1).exp();
            gp[0] = e1 + e2 - e3;
            gp[1] = 3.0 * (e1 - e2);
        }
    }
}

/// Σ_{i<n} sin(x₁ + xᵢ² − 1) + ½ sin(xₙ²)
pub struct Eg2;

impl Objective for Eg2 {
    fn value(&self, x: &[f64]) -> f64 {
        let n = x.len();
        x[..n - 1]
            .iter()
            .map(|v| (x[0] + v * v - 1.0).sin())
            .sum::<f64>()
            + 0.5 * (x[n - 1] * x[n - 1]).sin()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let n = x.len();
        g.fill(0.0);
        for i in 0..n - 1 {
            let c = (x[0] + x[i] * x[i] - 1.0).cos();
            g[0] += c;
            g[i] += 2.0 * x[i] * c;
        }
        g[n - 1] += x[n - 1] * (x[n - 1] * x[n - 1]).cos();
    }
}

/// Pairs: (a² + b² − 2)² + (exp(a − 1) − b)²
pub struct ExtendedBd1;

impl Objective for ExtendedBd1 {
    fn value(&self, x: &[f64]) -> f64 {
        x.chunks_exact(2)
            .map(|p| {
                (p[0] * p[0] + p[1] * p[1] - 2.0).powi(2) + ((p[0] - 1.0).exp() - p[1]).powi(2)
            })
            .sum()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        for (p, gp) in x.chunks_exact(2).zip(g.chunks_exact_mut(2)) {
            let q = p[0] * p[0] + p[1] * p[1] - 2.0;
            let e = (p[0] - 1.0).exp();
            gp[0] = 4.0 * p[0] * q + 2.0 * e * (e - p[1]);
            gp[1] = 4.0 * p[1] * q - 2.0 * (e - p[1]);
        }
    }

    fn minimizer(&self, n: usize) -> Option<Vec<f64>> {
        Some(vec![1.0; n])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::fd_jacobian;

    fn test_point(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| 0.3 + 0.17 * ((i * 7 % 11) as f64) - 0.05 * i as f64)
            .collect()
    }

    /// Central differences of the objective value; independent of the gradient code.
    fn numeric_gradient(obj: &dyn Objective, x: &[f64]) -> Vec<f64> {
        let mut xp = x.to_vec();
        (0..x.len())
            .map(|i| {
                let h = 1e-6 * x[i].abs().max(1.0);
                xp[i] = x[i] + h;
                let fp = obj.value(&xp);
                xp[i] = x[i] - h;
                let fm = obj.value(&xp);
                xp[i] = x[i];
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradients_match_value_differences() {
        for e in entries() {
            let n = 8;
            let Some(obj) = e.objective() else { continue };
            let x = test_point(n);
            let mut g = vec![0.0; n];
            obj.gradient(&x, &mut g);
            let num = numeric_gradient(obj.as_ref(), &x);
            let scale = g.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            // Truncation error plus cancellation in the value differences.
            let tol = 1e-6 * scale + 1e-9 * obj.value(&x).abs();
            for i in 0..n {
                assert!(
                    (g[i] - num[i]).abs() <= tol,
                    "{}: component {i}: analytic {} vs numeric {}",
                    e.name,
                    g[i],
                    num[i]
                );
            }
        }
    }

    #[test]
    fn analytic_jacobians_match_differences() {
        for e in entries() {
            let n = 8;
            let spec = registry_lookup(e.name, n, n).unwrap();
            if !spec.has_analytic_jacobian() {
                continue;
            }
            let x = test_point(n);
            let analytic = spec.analytic_jacobian(&x).unwrap().matrix;
            let f = spec.residual(&x);
            let fd = fd_jacobian(&spec, &x, &f, 1e-7).unwrap().matrix;
            let scale = analytic.max_abs().max(1.0);
            assert!(
                analytic.sub(&fd).max_abs() <= 1e-5 * scale,
                "{}: jacobian mismatch {:e}",
                e.name,
                analytic.sub(&fd).max_abs()
            );
        }
    }

    #[test]
    fn known_minimizers_are_roots() {
        for e in entries() {
            let n = if e.block == 4 { 8 } else { 10 };
            let mut g = vec![0.0; n];
            let root = match e.source() {
                Source::Gradient(obj) => obj.minimizer(n).map(|xs| {
                    obj.gradient(&xs, &mut g);
                }),
                Source::System(sys) => sys.root(n).map(|xs| {
                    sys.eval(&xs, &mut g);
                }),
            };
            if root.is_some() {
                let res = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                assert!(res <= 1e-8, "{}: |G(x*)| = {res:e}", e.name);
            }
        }
    }

    #[test]
    fn lookup_examples() {
        let spec = registry_lookup("rosenbrock", 10, 2000).unwrap();
        assert_eq!((spec.m(), spec.n()), (10, 2000));
        // All ones is the Rosenbrock minimizer, so the start moves to twos.
        assert!(spec.default_start().iter().all(|&v| v == 2.0));

        let spec = registry_lookup("trid", 2000, 2000).unwrap();
        assert_eq!((spec.m(), spec.n()), (2000, 2000));
        assert!(spec.default_start().iter().all(|&v| v == 1.0));

        assert_eq!(
            registry_lookup("nosuch", 1, 2).unwrap_err(),
            ProblemError::UnknownProblem("nosuch".into())
        );
        assert!(matches!(
            registry_lookup("powell-singular", 10, 2002),
            Err(ProblemError::InvalidDimension { .. })
        ));
        assert!(matches!(
            registry_lookup("trid", 11, 10),
            Err(ProblemError::InvalidDimension { .. })
        ));
    }

    #[test]
    fn trid_table_configuration() {
        let spec = registry_lookup("trid", 10, 2000).unwrap();
        let f = spec.residual(spec.default_start());
        assert_eq!(f.len(), 10);
        assert_eq!(f[0], -1.0);
        assert_eq!(f[1], -2.0);
    }

    #[test]
    fn single_equation_problem() {
        let spec = registry_lookup("dixon-price", 1, 6).unwrap();
        let mut g = vec![0.0; 6];
        DixonPrice.gradient(spec.default_start(), &mut g);
        assert_eq!(spec.residual(spec.default_start()), vec![g[0]]);
    }

    #[test]
    fn systems_are_used_directly() {
        let spec = registry_lookup("broyden-tridiagonal", 3, 4).unwrap();
        // At ones: G₁ = 1 − 2 + 1, G₂ = G₃ = 1 − 1 − 2 + 1.
        assert_eq!(spec.residual(spec.default_start()), vec![0.0, -1.0, -1.0]);
        let spec = registry_lookup("tridiagonal-system", 4, 4).unwrap();
        assert!(spec.default_start().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn every_problem_registers_at_small_size() {
        for e in entries() {
            let n = 8;
            for m in [1, n - 1, n] {
                let spec =
                    registry_lookup(e.name, m, n).unwrap_or_else(|err| panic!("{}: {err}", e.name));
                assert!(spec
                    .residual(spec.default_start())
                    .iter()
                    .all(|v| v.is_finite()));
            }
        }
    }
}

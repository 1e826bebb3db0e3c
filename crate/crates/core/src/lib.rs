//! Continuation Newton solver for square and underdetermined nonlinear
//! systems `F(x) = 0`, `F: Rⁿ → Rᵐ`, `m ≤ n`.
//!
//! [`solver::solve`] runs the time-stepping iteration with minimum-norm Newton
//! steps and Jacobian reuse. [`lm::lm_solve`] is a Levenberg-Marquardt
//! baseline, [`registry`] holds the benchmark problems and [`bench`] drives
//! the comparison tables.
//!
//! ```
//! use gcnmtr::registry::registry_lookup;
//! use gcnmtr::solver::{solve, SolverConfig};
//!
//! let problem = registry_lookup("dixon-price", 10, 100).unwrap();
//! let outcome = solve(&problem, None, &SolverConfig::default()).unwrap();
//! assert!(outcome.converged());
//! ```

pub mod bench;
pub mod flow;
pub mod linalg;
pub mod lm;
pub mod outcome;
pub mod problem;
pub mod registry;
pub mod solver;

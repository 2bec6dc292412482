//! Non-smooth multiobjective optimization on ℝⁿ.
//!
//! This crate solves multiobjective optimization problems (MOPs)
//! `min_x (f_1(x), ..., f_k(x))` whose objectives are only locally Lipschitz.
//! The user supplies, per objective, a value oracle and *one* Clarke
//! subgradient per point; everything else is built on top of that contract:
//!
//! * [`descent`] — local descent to Pareto critical points. Descent directions
//!   come from the minimum-norm element of the convex hull of a subgradient
//!   bundle that approximates the Goldstein ε-subdifferential and is enriched
//!   until the direction is provably acceptable. Driving ε → 0 yields Pareto
//!   critical limits.
//! * [`minnorm`] — the inner quadratic subproblem: minimum-norm point in the
//!   convex hull of finitely many vectors (Wolfe's active-set scheme).
//! * [`subdivision`] — global box coverings of the Pareto set via
//!   subdivide / sample / descend / select rounds.
//! * [`scalarize`] — weighted-sum and Pascoletti–Serafini scalarizations,
//!   reusing the non-smooth solver on the scalarized objectives.
//! * [`continuation`] — the Pareto critical set of `min (L(x), ‖x‖₁)` traced
//!   as a regularization path by predictor–corrector continuation with
//!   active-set event handling.
//! * [`inverse`] — inferring objectives from Pareto-critical data through the
//!   smallest right-singular vector of the KKT system over a function basis.
//! * [`catalog`] — built-in analytic test problems with known Pareto sets.
//!
//! All solvers are deterministic: identical inputs (including seeds) produce
//! identical results bit for bit.

pub mod catalog;
pub mod continuation;
pub mod descent;
pub mod inverse;
pub mod io;
pub mod minnorm;
pub mod problem;
pub mod scalarize;
pub mod subdivision;
pub mod svd;

pub use problem::{
    dominates, kkt_residual, CoreError, CriticalityCertificate, Dominance, MopProblem, Objective,
    SimplexWeights,
};

pub use descent::{DescentConfig, DescentTrace, Termination};

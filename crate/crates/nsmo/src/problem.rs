//! Problem representation and first-order optimality primitives.
//!
//! A [`MopProblem`] bundles `k` objective oracles on ℝⁿ. Each oracle exposes
//! the function value and a single Clarke subgradient at every point — the
//! full subdifferential is never required. For objectives declared smooth the
//! subgradient is the gradient.
//!
//! Pareto criticality of `x` means `0 ∈ conv(∂f_1(x) ∪ … ∪ ∂f_k(x))`; in the
//! smooth case this is the familiar condition that some convex combination of
//! the gradients vanishes. [`kkt_residual`] measures the norm of such a
//! combination, and [`CriticalityCertificate`] packages the approximate
//! steepest-descent direction together with the subgradient bundle and convex
//! weights that certify it.

use std::sync::Arc;

use nalgebra::DVector;
use thiserror::Error;

/// Errors from problem evaluation and the shared domain types.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("objective {objective} returned a non-finite value")]
    NonFiniteValue { objective: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid simplex weights: {0}")]
    InvalidWeights(String),
    #[error("non-finite input point")]
    NonFiniteInput,
    #[error("objective {objective} subgradient deviates from finite differences by {deviation:.3e} (allowed {allowed:.3e})")]
    GradientMismatch {
        objective: usize,
        deviation: f64,
        allowed: f64,
    },
}

type ValueFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
type SubgradFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

/// One objective oracle: a value function and one Clarke subgradient per point.
///
/// Oracles must be pure functions of `x` (safe to call concurrently, identical
/// results for identical inputs).
#[derive(Clone)]
pub struct Objective {
    value: ValueFn,
    subgrad: SubgradFn,
    smooth: bool,
    lipschitz_hint: Option<f64>,
}

impl Objective {
    /// A locally Lipschitz objective with an arbitrary-subgradient oracle.
    pub fn nonsmooth(
        value: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        subgrad: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            subgrad: Arc::new(subgrad),
            smooth: false,
            lipschitz_hint: None,
        }
    }

    /// A continuously differentiable objective; `gradient` doubles as the
    /// subgradient oracle.
    pub fn smooth(
        value: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            subgrad: Arc::new(gradient),
            smooth: true,
            lipschitz_hint: None,
        }
    }

    pub fn with_lipschitz_hint(mut self, l: f64) -> Self {
        self.lipschitz_hint = Some(l);
        self
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value)(x)
    }

    pub fn subgrad(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.subgrad)(x)
    }

    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    pub fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz_hint
    }
}

/// A multiobjective optimization problem `min_x (f_1(x), …, f_k(x))` on ℝⁿ.
#[derive(Clone)]
pub struct MopProblem {
    name: String,
    n: usize,
    objectives: Vec<Objective>,
}

impl MopProblem {
    /// # Panics
    /// If `n == 0` or `objectives` is empty.
    pub fn new(name: impl Into<String>, n: usize, objectives: Vec<Objective>) -> Self {
        assert!(n > 0, "problem dimension must be positive");
        assert!(!objectives.is_empty(), "need at least one objective");
        Self {
            name: name.into(),
            n,
            objectives,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Decision-space dimension n.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of objectives k.
    pub fn n_objectives(&self) -> usize {
        self.objectives.len()
    }

    pub fn objective(&self, i: usize) -> &Objective {
        &self.objectives[i]
    }

    pub fn objectives(&self) -> &[Objective] {
        &self.objectives
    }

    /// Evaluate all objectives at `x`.
    ///
    /// Fails with the offending objective index when an oracle returns a
    /// non-finite value.
    pub fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>, CoreError> {
        if x.len() != self.n {
            return Err(CoreError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFiniteInput);
        }
        let mut out = DVector::zeros(self.objectives.len());
        for (i, obj) in self.objectives.iter().enumerate() {
            let v = obj.value(x);
            if !v.is_finite() {
                return Err(CoreError::NonFiniteValue { objective: i });
            }
            out[i] = v;
        }
        Ok(out)
    }

    /// One subgradient per objective at `x`, in objective order.
    pub fn subgradients(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        self.objectives.iter().map(|o| o.subgrad(x)).collect()
    }
}

/// Outcome of comparing two objective vectors componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    /// `a < b` in every component.
    Strict,
    /// `a ≤ b` everywhere with `a ≠ b`, but not strict.
    Weak,
    /// Neither point is better.
    None,
}

/// Componentwise dominance test of `a` over `b`.
pub fn dominates(a: &DVector<f64>, b: &DVector<f64>) -> Result<Dominance, CoreError> {
    if a.len() != b.len() {
        return Err(CoreError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut all_le = true;
    let mut all_lt = true;
    let mut any_lt = false;
    for (ai, bi) in a.iter().zip(b.iter()) {
        if ai > bi {
            all_le = false;
            all_lt = false;
        } else if ai < bi {
            any_lt = true;
        } else {
            all_lt = false;
        }
    }
    if all_lt {
        Ok(Dominance::Strict)
    } else if all_le && any_lt {
        Ok(Dominance::Weak)
    } else {
        Ok(Dominance::None)
    }
}

/// Convex-combination weights: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights(DVector<f64>);

impl SimplexWeights {
    /// Validates nonnegativity and that the entries sum to 1 within 1e-12.
    pub fn new(w: DVector<f64>) -> Result<Self, CoreError> {
        if w.is_empty() {
            return Err(CoreError::InvalidWeights("empty weight vector".into()));
        }
        if let Some(neg) = w.iter().find(|v| **v < 0.0 || !v.is_finite()) {
            return Err(CoreError::InvalidWeights(format!(
                "entry {neg} is negative or non-finite"
            )));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(CoreError::InvalidWeights(format!(
                "entries sum to {sum}, expected 1"
            )));
        }
        Ok(Self(w))
    }

    /// Clamps negative round-off (≥ −1e-9) to zero and rescales to sum 1.
    pub fn normalized(mut w: DVector<f64>) -> Result<Self, CoreError> {
        if w.is_empty() {
            return Err(CoreError::InvalidWeights("empty weight vector".into()));
        }
        for v in w.iter_mut() {
            if !v.is_finite() {
                return Err(CoreError::InvalidWeights("non-finite entry".into()));
            }
            if *v < 0.0 {
                if *v < -1e-9 {
                    return Err(CoreError::InvalidWeights(format!(
                        "entry {v} is too negative to be round-off"
                    )));
                }
                *v = 0.0;
            }
        }
        let sum: f64 = w.iter().sum();
        if sum <= 0.0 {
            return Err(CoreError::InvalidWeights("entries sum to zero".into()));
        }
        w /= sum;
        Ok(Self(w))
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0);
        Self(DVector::from_element(k, 1.0 / k as f64))
    }

    /// Two-component weights `(w, 1−w)` for `w ∈ [0, 1]`.
    pub fn pair(w: f64) -> Result<Self, CoreError> {
        Self::new(DVector::from_vec(vec![w, 1.0 - w]))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }
}

/// `‖Σ_i α_i ξ_i(x)‖₂` with `ξ_i` the subgradient oracle of objective `i`.
///
/// At a smooth point this is the norm of the weighted gradient sum, so a zero
/// residual together with simplex weights `α` certifies Pareto criticality.
pub fn kkt_residual(problem: &MopProblem, x: &DVector<f64>, alpha: &SimplexWeights) -> f64 {
    assert_eq!(
        alpha.len(),
        problem.n_objectives(),
        "weights must have one entry per objective"
    );
    let mut acc = DVector::zeros(problem.dim());
    for (i, obj) in problem.objectives().iter().enumerate() {
        acc += obj.subgrad(x) * alpha.get(i);
    }
    acc.norm()
}

/// Certificate of approximate ε-criticality at a point.
///
/// `direction` is the approximated steepest-descent direction
/// `ṽ = −Σ_j w_j ξ_j` over the bundle `W = {ξ_j}`; `residual = ‖ṽ‖₂` is the
/// criticality measure (zero means `0 ∈ conv(W)`).
#[derive(Debug, Clone)]
pub struct CriticalityCertificate {
    pub direction: DVector<f64>,
    pub residual: f64,
    /// Collected subgradients with the objective index each one came from.
    pub bundle: Vec<(usize, DVector<f64>)>,
    pub bundle_weights: SimplexWeights,
    /// Radius of the ball over which subgradients were sampled.
    pub epsilon: f64,
}

impl CriticalityCertificate {
    /// Checks the internal consistency invariants: the direction is the
    /// negated weighted bundle combination (within 1e-10) and the residual is
    /// its norm (within 1e-12).
    pub fn is_consistent(&self) -> bool {
        if self.bundle.len() != self.bundle_weights.len() {
            return false;
        }
        let n = self.direction.len();
        let mut combo = DVector::zeros(n);
        for (j, (_, xi)) in self.bundle.iter().enumerate() {
            combo += xi * self.bundle_weights.get(j);
        }
        let dir_err = (&self.direction + &combo).norm();
        let res_err = (self.residual - self.direction.norm()).abs();
        dir_err <= 1e-10 && res_err <= 1e-12
    }
}

/// Central finite-difference gradient of `f` at `x` with per-coordinate step
/// `1e-6 · (1 + |x_i|)`.
pub fn central_difference(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>) -> DVector<f64> {
    let n = x.len();
    let mut g = DVector::zeros(n);
    for i in 0..n {
        let h = 1e-6 * (1.0 + x[i].abs());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(&xp) - f(&xm)) / (2.0 * h);
    }
    g
}

/// Verifies that every declared-smooth objective's subgradient matches central
/// finite differences of its value at each supplied point, within
/// `1e-5 · (1 + ‖subgrad(x)‖)`.
pub fn check_declared_gradients(
    problem: &MopProblem,
    points: &[DVector<f64>],
) -> Result<(), CoreError> {
    for x in points {
        for (i, obj) in problem.objectives().iter().enumerate() {
            if !obj.is_smooth() {
                continue;
            }
            let g = obj.subgrad(x);
            let fd = central_difference(|y| obj.value(y), x);
            let deviation = (&g - &fd).norm();
            let allowed = 1e-5 * (1.0 + g.norm());
            if deviation > allowed {
                return Err(CoreError::GradientMismatch {
                    objective: i,
                    deviation,
                    allowed,
                });
            }
        }
    }
    Ok(())
}

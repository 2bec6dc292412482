//! Descent to Pareto critical points for locally Lipschitz objectives.
//!
//! At the current iterate the bundle `W` starts with one subgradient per
//! objective. The candidate direction is `ṽ = −argmin{‖ξ‖² : ξ ∈ conv(W)}`.
//! It is *acceptable* once
//!
//! ```text
//! f_i(x + (ε/‖ṽ‖)·ṽ) ≤ f_i(x) − c·ε·‖ṽ‖    for all i,
//! ```
//!
//! otherwise the mean value theorem of non-smooth analysis guarantees a
//! subgradient `ξ′ ∈ ∂f_i(x + t′ṽ)` with `⟨ξ′, ṽ⟩ > −c‖ṽ‖²` for some
//! `t′ ∈ (0, ε/‖ṽ‖)`; such a `ξ′` lies outside `conv(W)`, so adding it
//! makes progress and the enrichment loop terminates. A backtracking line
//! search along accepted directions then yields strict decrease in every
//! objective. The outer loop drives ε to zero whenever the criticality
//! residual `‖ṽ‖` falls below `κ·ε`, which steers the iterates to Pareto
//! critical points.

use std::io::Write;

use nalgebra::DVector;
use thiserror::Error;

use crate::io::fmt_f64;
use crate::minnorm::{self, MinNormError};
use crate::problem::{CoreError, CriticalityCertificate, MopProblem};

#[derive(Debug, Error)]
pub enum DescentError {
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("direction must be nonzero")]
    ZeroDirection,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("enrichment bisection exhausted for objective {objective}")]
    BisectionExhausted { objective: usize },
    #[error("enrichment budget exhausted at residual {residual:.3e} with bundle size {bundle_size}")]
    EnrichmentBudget {
        residual: f64,
        bundle_size: usize,
        bundle: Vec<(usize, DVector<f64>)>,
    },
    #[error("no admissible line-search step")]
    LineSearchFailed,
    #[error(transparent)]
    Oracle(#[from] CoreError),
    #[error(transparent)]
    MinNorm(#[from] MinNormError),
}

/// Tuning knobs of the descent method. `Default` gives the desk-scale
/// settings; every field can be overridden.
#[derive(Debug, Clone)]
pub struct DescentConfig {
    /// Acceptance constant in (0, 1).
    pub c: f64,
    /// Initial sampling radius ε.
    pub eps0: f64,
    /// Shrink factor for ε in (0, 1).
    pub theta_eps: f64,
    /// ε is reduced once the residual falls below `kappa·ε`.
    pub kappa: f64,
    /// Line-search backtracking factor in (0, 1).
    pub beta: f64,
    pub max_outer: usize,
    pub max_enrich: usize,
    /// Final criticality residual target.
    pub tol_crit: f64,
    /// Final ε target.
    pub tol_eps: f64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            c: 0.25,
            eps0: 0.1,
            theta_eps: 0.5,
            kappa: 1.0,
            beta: 0.5,
            max_outer: 10_000,
            max_enrich: 100,
            tol_crit: 1e-6,
            tol_eps: 1e-6,
        }
    }
}

impl DescentConfig {
    pub fn validate(&self) -> Result<(), DescentError> {
        let bad = |msg: &str| Err(DescentError::InvalidConfig(msg.into()));
        if !(self.c > 0.0 && self.c < 1.0) {
            return bad("c must lie in (0,1)");
        }
        if !(self.eps0 > 0.0) {
            return bad("eps0 must be positive");
        }
        if !(self.theta_eps > 0.0 && self.theta_eps < 1.0) {
            return bad("theta_eps must lie in (0,1)");
        }
        if !(self.kappa > 0.0) {
            return bad("kappa must be positive");
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta must lie in (0,1)");
        }
        if !(self.tol_crit > 0.0 && self.tol_eps > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_outer == 0 || self.max_enrich == 0 {
            return bad("budgets must be positive");
        }
        Ok(())
    }
}

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Residual ≤ tol_crit and ε ≤ tol_eps: approximately Pareto critical.
    Critical,
    MaxIterations,
    /// Direction enrichment or the line search failed.
    LineSearchFailure,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Critical => "critical",
            Termination::MaxIterations => "max_iterations",
            Termination::LineSearchFailure => "line_search_failure",
        }
    }
}

/// One outer-iteration snapshot: the iterate, its objective vector, the ε in
/// force, the certificate residual and the step taken *from* this iterate
/// (0 for ε reductions and for the terminal record).
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub x: DVector<f64>,
    pub f: DVector<f64>,
    pub epsilon: f64,
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct DescentTrace {
    pub records: Vec<TraceRecord>,
    pub termination: Termination,
}

impl DescentTrace {
    pub fn final_x(&self) -> &DVector<f64> {
        &self.records.last().expect("trace is never empty").x
    }

    pub fn final_f(&self) -> &DVector<f64> {
        &self.records.last().expect("trace is never empty").f
    }

    pub fn final_record(&self) -> &TraceRecord {
        self.records.last().expect("trace is never empty")
    }

    /// Number of records that actually moved the iterate.
    pub fn accepted_steps(&self) -> usize {
        self.records.iter().filter(|r| r.step > 0.0).count()
    }

    /// Trace CSV: `iter, x_1..x_n, f_1..f_k, eps, residual, step`.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        let n = self.records.first().map_or(0, |r| r.x.len());
        let k = self.records.first().map_or(0, |r| r.f.len());
        let mut header = vec!["iter".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.extend((1..=k).map(|i| format!("f_{i}")));
        header.extend(["eps", "residual", "step"].map(String::from));
        writeln!(w, "{}", header.join(","))?;
        for (it, r) in self.records.iter().enumerate() {
            let mut row = vec![it.to_string()];
            row.extend(r.x.iter().map(|v| fmt_f64(*v)));
            row.extend(r.f.iter().map(|v| fmt_f64(*v)));
            row.push(fmt_f64(r.epsilon));
            row.push(fmt_f64(r.residual));
            row.push(fmt_f64(r.step));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Approximate steepest-descent direction at `x` for sampling radius `epsilon`.
///
/// Returns a certificate that is either approximately ε-critical or whose
/// direction satisfies the acceptance inequality for every objective. The
/// bundle starts with one subgradient per objective and grows by at most
/// `cfg.max_enrich` enrichments.
///
/// The ε-criticality exit fires at `max(cfg.tol_crit, cfg.kappa·ε)`: at an
/// ε-critical point no acceptable direction exists and the bundle residual
/// converges to the criticality measure, so the threshold must be the same
/// one that triggers the ε reduction in the outer loop.
pub fn compute_direction(
    problem: &MopProblem,
    x: &DVector<f64>,
    epsilon: f64,
    cfg: &DescentConfig,
) -> Result<CriticalityCertificate, DescentError> {
    if !(epsilon > 0.0) {
        return Err(DescentError::InvalidEpsilon(epsilon));
    }
    let fx = problem.evaluate(x)?;
    let k = problem.n_objectives();
    let critical_below = cfg.tol_crit.max(cfg.kappa * epsilon);
    let mut bundle: Vec<(usize, DVector<f64>)> = (0..k)
        .map(|i| (i, problem.objective(i).subgrad(x)))
        .collect();

    for _ in 0..=cfg.max_enrich {
        let gens: Vec<DVector<f64>> = bundle.iter().map(|(_, g)| g.clone()).collect();
        let qp = minnorm::min_norm_point(&gens)?;
        let direction = -&qp.point;
        let residual = direction.norm();
        let cert = CriticalityCertificate {
            direction: direction.clone(),
            residual,
            bundle: bundle.clone(),
            bundle_weights: qp.weights,
            epsilon,
        };
        if residual <= critical_below {
            return Ok(cert);
        }
        // Acceptance test at the trial point x + (ε/‖ṽ‖)·ṽ.
        let trial = x + &direction * (epsilon / residual);
        let decrease = cfg.c * epsilon * residual;
        let mut failing = None;
        for i in 0..k {
            let fi = problem.objective(i).value(&trial);
            if !(fi <= fx[i] - decrease) {
                failing = Some(i);
                break;
            }
        }
        let Some(i) = failing else {
            return Ok(cert);
        };
        let xi = find_enriching_subgradient(problem, x, &direction, i, epsilon, cfg.c)?;
        bundle.push((i, xi));
    }

    let gens: Vec<DVector<f64>> = bundle.iter().map(|(_, g)| g.clone()).collect();
    let residual = minnorm::min_norm_point(&gens)?.point.norm();
    Err(DescentError::EnrichmentBudget {
        residual,
        bundle_size: bundle.len(),
        bundle,
    })
}

/// Finds `ξ′ ∈ ∂f_i(x + t′v)` with `⟨ξ′, v⟩ > −c‖v‖₂²` after the acceptance
/// inequality failed for objective `failing_i` along `v`.
///
/// Deterministic bisection on `t ∈ (0, ε/‖v‖]` guided by the gap
/// `h(t) = f_i(x+tv) − f_i(x) + c·t·‖v‖²`: the bracket keeps `h > 0` at its
/// right end (true at the trial step because acceptance failed there), each
/// probe queries one subgradient, and the first probe whose subgradient
/// violates the bound is returned.
pub fn find_enriching_subgradient(
    problem: &MopProblem,
    x: &DVector<f64>,
    v: &DVector<f64>,
    failing_i: usize,
    epsilon: f64,
    c: f64,
) -> Result<DVector<f64>, DescentError> {
    let vnorm = v.norm();
    if vnorm == 0.0 {
        return Err(DescentError::ZeroDirection);
    }
    if !(epsilon > 0.0) {
        return Err(DescentError::InvalidEpsilon(epsilon));
    }
    let vnorm2 = vnorm * vnorm;
    let obj = problem.objective(failing_i);
    let fx = obj.value(x);
    let mut a = 0.0f64;
    let mut b = epsilon / vnorm;
    for _ in 0..50 {
        let t = 0.5 * (a + b);
        let xt = x + v * t;
        let xi = obj.subgrad(&xt);
        if xi.dot(v) > -c * vnorm2 {
            return Ok(xi);
        }
        let h = obj.value(&xt) - fx + c * t * vnorm2;
        if h > 0.0 {
            b = t;
        } else {
            a = t;
        }
    }
    Err(DescentError::BisectionExhausted {
        objective: failing_i,
    })
}

/// Backtracking line search: the largest `t ∈ {ε/‖v‖ · βᵐ}` with
/// `f_i(x+tv) ≤ f_i(x) − c·t·‖v‖²` for all objectives (m ≤ 60).
///
/// When `v` is acceptable the first trial passes and `t = ε/‖v‖` is returned.
pub fn line_search(
    problem: &MopProblem,
    x: &DVector<f64>,
    v: &DVector<f64>,
    epsilon: f64,
    cfg: &DescentConfig,
) -> Result<f64, DescentError> {
    let vnorm = v.norm();
    if vnorm == 0.0 {
        return Err(DescentError::ZeroDirection);
    }
    if !(epsilon > 0.0) {
        return Err(DescentError::InvalidEpsilon(epsilon));
    }
    let fx = problem.evaluate(x)?;
    let vnorm2 = vnorm * vnorm;
    let t0 = epsilon / vnorm;
    let mut t = t0;
    for _ in 0..=60 {
        let xt = x + v * t;
        let ok = (0..problem.n_objectives())
            .all(|i| problem.objective(i).value(&xt) <= fx[i] - cfg.c * t * vnorm2);
        if ok {
            return Ok(t);
        }
        t *= cfg.beta;
    }
    Err(DescentError::LineSearchFailed)
}

/// Full descent run from `x0`.
///
/// Each outer iteration computes a direction at the current ε; if the residual
/// is at most `κ·ε` the radius shrinks without moving, otherwise a line-search
/// step is taken. Terminates as critical once `residual ≤ tol_crit` and
/// `ε ≤ tol_eps`. In-run failures are recorded in the trace termination.
pub fn solve(
    problem: &MopProblem,
    x0: &DVector<f64>,
    cfg: &DescentConfig,
) -> Result<DescentTrace, DescentError> {
    solve_limited(problem, x0, cfg, None)
}

/// [`solve`] stopping additionally after `max_steps` accepted steps
/// (ε reductions do not count). Used by the subdivision driver.
pub fn solve_limited(
    problem: &MopProblem,
    x0: &DVector<f64>,
    cfg: &DescentConfig,
    max_steps: Option<usize>,
) -> Result<DescentTrace, DescentError> {
    cfg.validate()?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(DescentError::Oracle(CoreError::NonFiniteInput));
    }
    let mut x = x0.clone();
    let mut eps = cfg.eps0;
    let mut records: Vec<TraceRecord> = Vec::new();
    let mut accepted = 0usize;

    let push = |records: &mut Vec<TraceRecord>,
                problem: &MopProblem,
                x: &DVector<f64>,
                eps: f64,
                residual: f64,
                step: f64| {
        let f = problem
            .evaluate(x)
            .unwrap_or_else(|_| DVector::from_element(problem.n_objectives(), f64::NAN));
        records.push(TraceRecord {
            x: x.clone(),
            f,
            epsilon: eps,
            residual,
            step,
        });
    };

    for _ in 0..cfg.max_outer {
        if let Some(limit) = max_steps {
            if accepted >= limit {
                let residual = last_residual(&records);
                push(&mut records, problem, &x, eps, residual, 0.0);
                return Ok(DescentTrace {
                    records,
                    termination: Termination::MaxIterations,
                });
            }
        }
        let cert = match compute_direction(problem, &x, eps, cfg) {
            Ok(cert) => cert,
            Err(_) => {
                let residual = last_residual(&records);
                push(&mut records, problem, &x, eps, residual, 0.0);
                return Ok(DescentTrace {
                    records,
                    termination: Termination::LineSearchFailure,
                });
            }
        };
        if cert.residual <= cfg.tol_crit && eps <= cfg.tol_eps {
            push(&mut records, problem, &x, eps, cert.residual, 0.0);
            return Ok(DescentTrace {
                records,
                termination: Termination::Critical,
            });
        }
        // Shrink whenever the direction came out of the ε-criticality exit;
        // such directions carry no acceptance guarantee.
        if cert.residual <= cfg.tol_crit.max(cfg.kappa * eps) {
            push(&mut records, problem, &x, eps, cert.residual, 0.0);
            eps *= cfg.theta_eps;
            continue;
        }
        let t = match line_search(problem, &x, &cert.direction, eps, cfg) {
            Ok(t) => t,
            Err(_) => {
                push(&mut records, problem, &x, eps, cert.residual, 0.0);
                return Ok(DescentTrace {
                    records,
                    termination: Termination::LineSearchFailure,
                });
            }
        };
        push(&mut records, problem, &x, eps, cert.residual, t);
        x += &cert.direction * t;
        accepted += 1;
    }

    // Budget exhausted: record the final iterate with an honest residual.
    let residual = compute_direction(problem, &x, eps, cfg)
        .map(|c| c.residual)
        .unwrap_or(f64::NAN);
    push(&mut records, problem, &x, eps, residual, 0.0);
    Ok(DescentTrace {
        records,
        termination: Termination::MaxIterations,
    })
}

fn last_residual(records: &[TraceRecord]) -> f64 {
    records.last().map_or(f64::NAN, |r| r.residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::minnorm::min_norm_point;
    use nalgebra::dvector;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn paraboloid() -> MopProblem {
        catalog::make_paraboloid(&dvector![0.0, 0.0], &dvector![1.0, 0.5])
    }

    fn abs_pair() -> MopProblem {
        catalog::make_abs_biobjective(2.0)
    }

    #[test]
    fn smooth_direction_is_the_negated_min_norm_gradient_hull_point() {
        let p = paraboloid();
        let x = dvector![2.0, 1.0];
        let cfg = DescentConfig::default();
        for eps in [0.1, 0.01] {
            let cert = compute_direction(&p, &x, eps, &cfg).unwrap();
            // Smooth problem: no enrichment, bundle is one gradient per objective.
            assert_eq!(cert.bundle.len(), 2);
            let grads = p.subgradients(&x);
            let qp = min_norm_point(&grads).unwrap();
            assert!((&cert.direction + &qp.point).norm() <= 1e-10);
            assert!(cert.is_consistent());
            // The acceptance inequality holds at the trial step.
            let trial = &x + &cert.direction * (eps / cert.residual);
            let fx = p.evaluate(&x).unwrap();
            let ft = p.evaluate(&trial).unwrap();
            for i in 0..2 {
                assert!(ft[i] <= fx[i] - cfg.c * eps * cert.residual + 1e-12);
            }
        }
    }

    #[test]
    fn one_dimensional_critical_point_is_recognized() {
        let p = MopProblem::new(
            "two-quadratics",
            1,
            vec![
                Objective::smooth(|x: &DVector<f64>| x[0] * x[0], |x| dvector![2.0 * x[0]]),
                Objective::smooth(
                    |x: &DVector<f64>| (x[0] - 2.0) * (x[0] - 2.0),
                    |x| dvector![2.0 * (x[0] - 2.0)],
                ),
            ],
        );
        let cfg = DescentConfig::default();
        // Gradients at x = 1 are 2 and −2; their hull contains 0.
        let cert = compute_direction(&p, &dvector![1.0], 0.01, &cfg).unwrap();
        assert!(cert.residual <= cfg.tol_crit);
    }

    use crate::problem::Objective;

    #[test]
    fn nonsmooth_direction_decreases_both_objectives() {
        let p = abs_pair();
        let x = dvector![1.0, 1.0];
        let cfg = DescentConfig::default();
        let cert = compute_direction(&p, &x, 0.1, &cfg).unwrap();
        assert!(cert.residual > cfg.tol_crit);
        // Both objectives share the −2x₂ dependence; descending means moving down.
        assert!(cert.direction[1] < 0.0);
        let fx = p.evaluate(&x).unwrap();
        let trial = &x + &cert.direction * (0.1 / cert.residual);
        let ft = p.evaluate(&trial).unwrap();
        assert!(ft[0] < fx[0] && ft[1] < fx[1]);
    }

    #[test]
    fn enrichment_crosses_the_kink_of_abs() {
        // f = |x| at x = 1 with v = −2, ε = 4, c = 0.5: the trial step lands at
        // f(−3) = 3 > 1 − 4 = −3, so acceptance fails; the first bisection
        // probe at t = 1 samples x = −1 and returns ξ′ = −1 with
        // ⟨−1, −2⟩ = 2 > −0.5·4 = −2.
        let p = MopProblem::new(
            "abs",
            1,
            vec![Objective::nonsmooth(
                |x: &DVector<f64>| x[0].abs(),
                |x: &DVector<f64>| dvector![if x[0] > 0.0 { 1.0 } else if x[0] < 0.0 { -1.0 } else { 0.0 }],
            )],
        );
        let xi = find_enriching_subgradient(&p, &dvector![1.0], &dvector![-2.0], 0, 4.0, 0.5)
            .unwrap();
        assert_eq!(xi, dvector![-1.0]);
    }

    #[test]
    fn enrichment_handles_pure_curvature_violations() {
        // Smooth f(x) = x⁴ at x = 1 with a large ε: acceptance fails through
        // curvature alone and the mean value theorem still provides a valid
        // subgradient at an interior point.
        let p = MopProblem::new(
            "quartic",
            1,
            vec![Objective::smooth(
                |x: &DVector<f64>| x[0].powi(4),
                |x: &DVector<f64>| dvector![4.0 * x[0].powi(3)],
            )],
        );
        let v = dvector![-4.0];
        let c = 0.25;
        let xi = find_enriching_subgradient(&p, &dvector![1.0], &v, 0, 8.0, c).unwrap();
        assert!(xi.dot(&v) > -c * v.norm_squared());
    }

    #[test]
    fn zero_direction_is_rejected() {
        let p = abs_pair();
        assert!(matches!(
            find_enriching_subgradient(&p, &dvector![1.0, 0.0], &dvector![0.0, 0.0], 0, 0.1, 0.25),
            Err(DescentError::ZeroDirection)
        ));
        assert!(matches!(
            line_search(&p, &dvector![1.0, 0.0], &dvector![0.0, 0.0], 0.1, &DescentConfig::default()),
            Err(DescentError::ZeroDirection)
        ));
    }

    #[test]
    fn acceptable_directions_take_the_full_trial_step() {
        let p = paraboloid();
        let x = dvector![2.0, 1.0];
        let cfg = DescentConfig::default();
        let eps = 0.05;
        let cert = compute_direction(&p, &x, eps, &cfg).unwrap();
        let t = line_search(&p, &x, &cert.direction, eps, &cfg).unwrap();
        assert_eq!(t, eps / cert.residual);
    }

    #[test]
    fn line_search_on_a_quadratic_pair() {
        let p = MopProblem::new(
            "two-quadratics",
            1,
            vec![
                Objective::smooth(|x: &DVector<f64>| x[0] * x[0], |x| dvector![2.0 * x[0]]),
                Objective::smooth(
                    |x: &DVector<f64>| (x[0] - 2.0) * (x[0] - 2.0),
                    |x| dvector![2.0 * (x[0] - 2.0)],
                ),
            ],
        );
        let cfg = DescentConfig::default();
        let x = dvector![3.0];
        let v = dvector![-2.0];
        let eps = 0.1;
        let t = line_search(&p, &x, &v, eps, &cfg).unwrap();
        assert_eq!(t, eps / 2.0);
        let fx = p.evaluate(&x).unwrap();
        let ft = p.evaluate(&(&x + &v * t)).unwrap();
        assert!(ft[0] < fx[0] && ft[1] < fx[1]);
    }

    #[test]
    fn solve_reaches_the_paraboloid_segment() {
        let p = paraboloid();
        let cfg = DescentConfig::default();
        let trace = solve(&p, &dvector![-1.0, 2.0], &cfg).unwrap();
        assert_eq!(trace.termination, Termination::Critical);
        let d = catalog::distance_to_segment(
            trace.final_x(),
            &dvector![0.0, 0.0],
            &dvector![1.0, 0.5],
        );
        assert!(d <= 1e-3, "distance {d}");
    }

    #[test]
    fn solve_reaches_the_abs_pareto_interval() {
        let p = abs_pair();
        let cfg = DescentConfig::default();
        let trace = solve(&p, &dvector![3.0, 1.0], &cfg).unwrap();
        assert_eq!(trace.termination, Termination::Critical);
        let x = trace.final_x();
        let d = catalog::distance_to_segment(x, &dvector![0.0, 0.0], &dvector![2.0, 0.0]);
        assert!(d <= 1e-3, "final {x:?}");
    }

    #[test]
    fn critical_start_takes_no_steps() {
        let p = paraboloid();
        let cfg = DescentConfig::default();
        let trace = solve(&p, &dvector![0.5, 0.25], &cfg).unwrap();
        assert_eq!(trace.termination, Termination::Critical);
        assert_eq!(trace.accepted_steps(), 0);
        // Only ε reductions happened; the iterate never moved.
        for r in &trace.records {
            assert_eq!(r.x, dvector![0.5, 0.25]);
        }
    }

    #[test]
    fn accepted_steps_decrease_every_objective() {
        let p = abs_pair();
        let cfg = DescentConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let x0 = dvector![rng.random_range(-1.0..3.0), rng.random_range(-1.0..1.0)];
            let trace = solve(&p, &x0, &cfg).unwrap();
            for w in trace.records.windows(2) {
                if w[0].step > 0.0 {
                    for i in 0..2 {
                        let gain = w[0].f[i] - w[1].f[i];
                        let promised = cfg.c * w[0].step * w[0].residual * w[0].residual;
                        assert!(gain >= promised - 1e-12, "gain {gain} promised {promised}");
                    }
                }
            }
        }
    }

    #[test]
    fn enrichment_prefix_residuals_are_non_increasing_and_sound() {
        // The max-type scalarization of the paraboloid produces enrichments.
        let p = paraboloid();
        let maxed = MopProblem::new(
            "max-scalarized",
            2,
            vec![Objective::nonsmooth(
                {
                    let p = p.clone();
                    move |x: &DVector<f64>| {
                        let f = p.evaluate(x).unwrap();
                        f[0].max(f[1])
                    }
                },
                {
                    let p = p.clone();
                    move |x: &DVector<f64>| {
                        let f = p.evaluate(x).unwrap();
                        if f[0] >= f[1] {
                            p.objective(0).subgrad(x)
                        } else {
                            p.objective(1).subgrad(x)
                        }
                    }
                },
            )],
        );
        let cfg = DescentConfig::default();
        // Near the ridge f1 = f2 the bundle needs enrichment.
        let x = dvector![0.625, 0.002];
        let cert = compute_direction(&maxed, &x, 0.05, &cfg).unwrap();
        assert!(cert.bundle.len() > 1, "expected at least one enrichment");
        let mut prev = f64::INFINITY;
        for len in 1..=cert.bundle.len() {
            let gens: Vec<DVector<f64>> =
                cert.bundle[..len].iter().map(|(_, g)| g.clone()).collect();
            let qp = min_norm_point(&gens).unwrap();
            let res = qp.point.norm();
            assert!(res <= prev + 1e-12, "residual grew: {res} > {prev}");
            // Soundness: each appended subgradient violated the bound for the
            // direction certified by the prefix before it.
            if len < cert.bundle.len() {
                let v = -qp.point;
                let next = &cert.bundle[len].1;
                if res > cfg.tol_crit {
                    assert!(next.dot(&v) > -cfg.c * v.norm_squared());
                }
            }
            prev = res;
        }
    }

    #[test]
    fn smooth_directions_converge_to_multiobjective_steepest_descent() {
        let p = paraboloid();
        let cfg = DescentConfig {
            tol_crit: 1e-9,
            ..DescentConfig::default()
        };
        for x in [dvector![2.0, 1.0], dvector![-1.0, 0.5], dvector![0.3, -0.8]] {
            let cert = compute_direction(&p, &x, 1e-6, &cfg).unwrap();
            let grads = p.subgradients(&x);
            let steepest = -min_norm_point(&grads).unwrap().point;
            assert!(
                (&cert.direction - &steepest).norm() <= 1e-4,
                "direction off by {}",
                (&cert.direction - &steepest).norm()
            );
        }
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let p = paraboloid();
        let cfg = DescentConfig {
            max_outer: 1,
            ..DescentConfig::default()
        };
        let trace = solve(&p, &dvector![-2.0, 2.0], &cfg).unwrap();
        assert_eq!(trace.termination, Termination::MaxIterations);
        assert!(!trace.records.is_empty());
    }

    #[test]
    fn trace_csv_shape() {
        let p = paraboloid();
        let trace = solve(&p, &dvector![-1.0, 2.0], &DescentConfig::default()).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "iter,x_1,x_2,f_1,f_2,eps,residual,step");
        assert_eq!(text.lines().count(), trace.records.len() + 1);
        for line in lines {
            assert_eq!(line.split(',').count(), 8);
        }
    }
}

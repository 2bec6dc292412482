//! Weighted-sum and Pascoletti–Serafini scalarizations.
//!
//! Both reductions reuse the non-smooth descent solver on a single scalarized
//! objective. The weighted sum minimizes `Σ α_i f_i` with subgradient
//! `Σ α_i ξ_i`. Pascoletti–Serafini with reference point `z` and direction
//! `r > 0` is solved in its unconstrained min–max form
//!
//! ```text
//! min_x  max_i (f_i(x) − z_i) / r_i,
//! ```
//!
//! whose optimal value is the τ of the constrained formulation; the
//! constraint `f(x) − z ≤ τ·r` then holds by construction. The subgradient of
//! the max is taken from a single maximizing component (lowest index on
//! ties), a valid Clarke subgradient element.

use std::io::Write;

use nalgebra::DVector;
use thiserror::Error;

use crate::descent::{self, DescentConfig, DescentError, Termination};
use crate::io::fmt_f64;
use crate::problem::{CoreError, MopProblem, Objective, SimplexWeights};

#[derive(Debug, Error)]
pub enum ScalarizeError {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("solver terminated with {0:?}")]
    NotCritical(Termination),
    #[error("empty specification list")]
    EmptySpecs,
    #[error(transparent)]
    Solver(#[from] DescentError),
    #[error(transparent)]
    Oracle(#[from] CoreError),
}

/// Pascoletti–Serafini data: reference point `z` and strictly positive
/// target direction `r`, both of objective-space dimension.
#[derive(Debug, Clone)]
pub struct PsSpec {
    pub z: DVector<f64>,
    pub r: DVector<f64>,
}

impl PsSpec {
    pub fn new(z: DVector<f64>, r: DVector<f64>) -> Result<Self, ScalarizeError> {
        if z.len() != r.len() {
            return Err(ScalarizeError::InvalidSpec(
                "z and r must have equal lengths".into(),
            ));
        }
        if r.iter().any(|v| !(*v > 0.0)) {
            return Err(ScalarizeError::InvalidSpec(
                "r must be strictly positive componentwise".into(),
            ));
        }
        Ok(Self { z, r })
    }
}

/// One scalarization instance inside a sweep.
#[derive(Debug, Clone)]
pub enum ScalarSpec {
    Weights(SimplexWeights),
    Ps(PsSpec),
}

/// Minimizes the weighted sum `g = Σ α_i f_i` with the descent solver.
/// Returns the critical point, the original objective vector there, and the
/// scalar value `g(x)`.
pub fn weighted_sum_solve(
    problem: &MopProblem,
    alpha: &SimplexWeights,
    x0: &DVector<f64>,
    cfg: &DescentConfig,
) -> Result<(DVector<f64>, DVector<f64>, f64), ScalarizeError> {
    if alpha.len() != problem.n_objectives() {
        return Err(ScalarizeError::InvalidSpec(format!(
            "expected {} weights, got {}",
            problem.n_objectives(),
            alpha.len()
        )));
    }
    let scalarized = weighted_sum_problem(problem, alpha);
    let trace = descent::solve(&scalarized, x0, cfg)?;
    if trace.termination != Termination::Critical {
        return Err(ScalarizeError::NotCritical(trace.termination));
    }
    let x = trace.final_x().clone();
    let f = problem.evaluate(&x)?;
    let value = scalarized.evaluate(&x)?[0];
    Ok((x, f, value))
}

fn weighted_sum_problem(problem: &MopProblem, alpha: &SimplexWeights) -> MopProblem {
    let w = alpha.as_vector().clone();
    let pv = problem.clone();
    let pg = problem.clone();
    let wg = w.clone();
    MopProblem::new(
        format!("{}-weighted-sum", problem.name()),
        problem.dim(),
        vec![Objective::nonsmooth(
            move |x: &DVector<f64>| {
                (0..pv.n_objectives())
                    .map(|i| w[i] * pv.objective(i).value(x))
                    .sum()
            },
            move |x: &DVector<f64>| {
                let mut g = DVector::zeros(pg.dim());
                for i in 0..pg.n_objectives() {
                    if wg[i] != 0.0 {
                        g += pg.objective(i).subgrad(x) * wg[i];
                    }
                }
                g
            },
        )],
    )
}

/// Solves the Pascoletti–Serafini problem in min–max form. Returns
/// `(x, τ, f(x))` with `τ = max_i (f_i(x) − z_i)/r_i`.
pub fn ps_solve(
    problem: &MopProblem,
    spec: &PsSpec,
    x0: &DVector<f64>,
    cfg: &DescentConfig,
) -> Result<(DVector<f64>, f64, DVector<f64>), ScalarizeError> {
    if spec.z.len() != problem.n_objectives() {
        return Err(ScalarizeError::InvalidSpec(format!(
            "expected z of length {}, got {}",
            problem.n_objectives(),
            spec.z.len()
        )));
    }
    let scalarized = ps_problem(problem, spec);
    let trace = descent::solve(&scalarized, x0, cfg)?;
    if trace.termination != Termination::Critical {
        return Err(ScalarizeError::NotCritical(trace.termination));
    }
    let x = trace.final_x().clone();
    let f = problem.evaluate(&x)?;
    let tau = ps_value(&f, spec);
    Ok((x, tau, f))
}

fn ps_value(f: &DVector<f64>, spec: &PsSpec) -> f64 {
    (0..f.len())
        .map(|i| (f[i] - spec.z[i]) / spec.r[i])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Index of the maximizing component, lowest index on ties within 1e-12.
fn ps_max_index(f: &DVector<f64>, spec: &PsSpec) -> usize {
    let vals: Vec<f64> = (0..f.len())
        .map(|i| (f[i] - spec.z[i]) / spec.r[i])
        .collect();
    let max = vals.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    vals.iter()
        .position(|v| *v >= max - 1e-12)
        .expect("max index exists")
}

fn ps_problem(problem: &MopProblem, spec: &PsSpec) -> MopProblem {
    let pv = problem.clone();
    let pg = problem.clone();
    let sv = spec.clone();
    let sg = spec.clone();
    MopProblem::new(
        format!("{}-pascoletti-serafini", problem.name()),
        problem.dim(),
        vec![Objective::nonsmooth(
            move |x: &DVector<f64>| {
                let f = pv.evaluate(x).expect("oracle failure inside scalarization");
                ps_value(&f, &sv)
            },
            move |x: &DVector<f64>| {
                let f = pg.evaluate(x).expect("oracle failure inside scalarization");
                let i = ps_max_index(&f, &sg);
                pg.objective(i).subgrad(x) / sg.r[i]
            },
        )],
    )
}

/// Starting-point policy for a sweep.
#[derive(Debug, Clone)]
pub enum X0Strategy {
    /// Every entry starts from the same point.
    Fixed(DVector<f64>),
    /// Each entry starts from the previous successful solution.
    WarmStart(DVector<f64>),
}

/// One solved (or failed) sweep entry.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub spec: ScalarSpec,
    pub x: Option<DVector<f64>>,
    pub f: Option<DVector<f64>>,
    pub scalar_value: Option<f64>,
    /// Survived the dominance filter (false for failed, dominated and
    /// duplicate entries).
    pub accepted: bool,
    pub error: Option<String>,
}

/// A Pareto front sweep over a list of scalarization specs.
#[derive(Debug, Clone)]
pub struct FrontSweep {
    pub entries: Vec<SweepEntry>,
    /// True when the accepted entries are mutually nondominated (checked with
    /// 1e-9 slack).
    pub nondominated: bool,
}

const DOM_SLACK: f64 = 1e-9;

fn weakly_dominates_with_slack(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    let mut any_strict = false;
    for (ai, bi) in a.iter().zip(b.iter()) {
        if *ai > bi + DOM_SLACK {
            return false;
        }
        if *ai < bi - DOM_SLACK {
            any_strict = true;
        }
    }
    any_strict
}

fn same_image(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= DOM_SLACK)
}

/// Solves every spec, then filters dominated and duplicate images.
/// Per-entry solver failures are recorded and the sweep continues.
pub fn front_sweep(
    problem: &MopProblem,
    specs: &[ScalarSpec],
    x0: &X0Strategy,
    cfg: &DescentConfig,
) -> Result<FrontSweep, ScalarizeError> {
    if specs.is_empty() {
        return Err(ScalarizeError::EmptySpecs);
    }
    let mut entries: Vec<SweepEntry> = Vec::with_capacity(specs.len());
    let mut current = match x0 {
        X0Strategy::Fixed(p) | X0Strategy::WarmStart(p) => p.clone(),
    };
    for spec in specs {
        let solved = match spec {
            ScalarSpec::Weights(alpha) => weighted_sum_solve(problem, alpha, &current, cfg)
                .map(|(x, f, v)| (x, f, v)),
            ScalarSpec::Ps(ps) => {
                ps_solve(problem, ps, &current, cfg).map(|(x, tau, f)| (x, f, tau))
            }
        };
        match solved {
            Ok((x, f, value)) => {
                if let X0Strategy::WarmStart(_) = x0 {
                    current = x.clone();
                }
                entries.push(SweepEntry {
                    spec: spec.clone(),
                    x: Some(x),
                    f: Some(f),
                    scalar_value: Some(value),
                    accepted: true,
                    error: None,
                });
            }
            Err(e) => entries.push(SweepEntry {
                spec: spec.clone(),
                x: None,
                f: None,
                scalar_value: None,
                accepted: false,
                error: Some(e.to_string()),
            }),
        }
    }

    // Dominance filter over the successful images; earlier entries win ties.
    let candidates: Vec<usize> = (0..entries.len()).filter(|&i| entries[i].accepted).collect();
    for &i in &candidates {
        let fi = entries[i].f.clone().expect("accepted entries carry images");
        let mut keep = true;
        for &j in &candidates {
            if i == j {
                continue;
            }
            let fj = entries[j].f.as_ref().expect("accepted entries carry images");
            if weakly_dominates_with_slack(fj, &fi) {
                keep = false;
                break;
            }
            if same_image(fj, &fi) && j < i {
                keep = false;
                break;
            }
        }
        entries[i].accepted = keep;
    }

    // The filter guarantees mutual nondominance; verify instead of assuming.
    let kept: Vec<&DVector<f64>> = entries
        .iter()
        .filter(|e| e.accepted)
        .map(|e| e.f.as_ref().expect("accepted entries carry images"))
        .collect();
    let mut nondominated = true;
    'outer: for (a, fa) in kept.iter().enumerate() {
        for (b, fb) in kept.iter().enumerate() {
            if a != b && weakly_dominates_with_slack(fa, fb) {
                nondominated = false;
                break 'outer;
            }
        }
    }

    Ok(FrontSweep {
        entries,
        nondominated,
    })
}

impl FrontSweep {
    pub fn accepted_entries(&self) -> impl Iterator<Item = &SweepEntry> {
        self.entries.iter().filter(|e| e.accepted)
    }

    /// Sweep CSV: `kind, spec (semicolon-joined numbers: weights, or z then
    /// r), x_1..x_n, f_1..f_k, scalar_value, accepted`.
    pub fn write_csv(&self, n: usize, k: usize, w: &mut impl Write) -> std::io::Result<()> {
        let mut header = vec!["kind".to_string(), "spec".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.extend((1..=k).map(|i| format!("f_{i}")));
        header.push("scalar_value".into());
        header.push("accepted".into());
        writeln!(w, "{}", header.join(","))?;
        for e in &self.entries {
            let (kind, spec) = match &e.spec {
                ScalarSpec::Weights(alpha) => (
                    "weights",
                    alpha
                        .as_vector()
                        .iter()
                        .map(|v| fmt_f64(*v))
                        .collect::<Vec<_>>()
                        .join(";"),
                ),
                ScalarSpec::Ps(ps) => (
                    "ps",
                    ps.z.iter()
                        .chain(ps.r.iter())
                        .map(|v| fmt_f64(*v))
                        .collect::<Vec<_>>()
                        .join(";"),
                ),
            };
            let mut row = vec![kind.to_string(), spec];
            match (&e.x, &e.f) {
                (Some(x), Some(f)) => {
                    row.extend(x.iter().map(|v| fmt_f64(*v)));
                    row.extend(f.iter().map(|v| fmt_f64(*v)));
                }
                _ => row.extend(std::iter::repeat_n(String::new(), n + k)),
            }
            row.push(e.scalar_value.map(fmt_f64).unwrap_or_default());
            row.push(if e.accepted { "1" } else { "0" }.into());
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

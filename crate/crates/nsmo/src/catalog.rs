//! Built-in analytic test problems with known Pareto sets.
//!
//! These serve as oracles for the solvers: each factory documents the exact
//! solution set, and the tests confirm the declared sets by brute-force
//! dominance filtering over dense grids.

use nalgebra::{DMatrix, DVector};

use crate::continuation::SmoothObjective;
use crate::problem::{MopProblem, Objective};
use crate::svd;

/// A catalog entry for `problems list`.
pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub parameters: &'static str,
}

/// Closed-form solution descriptor attached to a catalog problem.
#[derive(Debug, Clone)]
pub enum KnownSolution {
    /// The Pareto set is the line segment `[a, b]`.
    Segment { a: DVector<f64>, b: DVector<f64> },
}

pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "paraboloid",
            summary: "two smooth quadratics ‖x−c¹‖², ‖x−c²‖²; Pareto set = segment [c¹, c²]",
            parameters: "c1: vector, c2: vector (equal lengths, c1 ≠ c2)",
        },
        CatalogEntry {
            name: "abs_biobjective",
            summary: "f₁=|x₁|+x₂², f₂=|x₁−shift|+x₂² on ℝ²; Pareto set = {x₂=0, x₁∈[0,shift]}",
            parameters: "shift: positive scalar",
        },
        CatalogEntry {
            name: "l1_quadratic",
            summary: "regularization pair (½‖Ax−b‖², ‖x‖₁) for path continuation",
            parameters: "a: matrix (row-major), b: vector",
        },
    ]
}

/// The bi-quadratic problem `x ↦ (‖x−c1‖₂², ‖x−c2‖₂²)`.
///
/// Its Pareto set is exactly the segment `conv{c1, c2}`.
///
/// # Panics
/// If the centers have different lengths or coincide.
pub fn make_paraboloid(c1: &DVector<f64>, c2: &DVector<f64>) -> MopProblem {
    assert_eq!(c1.len(), c2.len(), "centers must have equal dimension");
    assert!((c1 - c2).norm() > 0.0, "centers must differ");
    fn squared_distance_to(c: &DVector<f64>) -> Objective {
        let cv = c.clone();
        let cg = c.clone();
        Objective::smooth(
            move |x: &DVector<f64>| (x - &cv).norm_squared(),
            move |x: &DVector<f64>| (x - &cg) * 2.0,
        )
    }
    MopProblem::new(
        "paraboloid",
        c1.len(),
        vec![squared_distance_to(c1), squared_distance_to(c2)],
    )
}

/// Pareto segment of [`make_paraboloid`].
pub fn paraboloid_pareto_segment(c1: &DVector<f64>, c2: &DVector<f64>) -> KnownSolution {
    KnownSolution::Segment {
        a: c1.clone(),
        b: c2.clone(),
    }
}

/// Sign with the `sign(0) = 0` convention used for ℓ1 and |·| subgradients.
fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Non-smooth pair `f₁ = |x₁| + x₂²`, `f₂ = |x₁ − shift| + x₂²` on ℝ².
///
/// The Pareto set is `{x₂ = 0, x₁ ∈ [0, shift]}`. At the kinks the
/// subgradient oracle returns the `0` element of `[−1, 1]`.
///
/// # Panics
/// If `shift ≤ 0`.
pub fn make_abs_biobjective(shift: f64) -> MopProblem {
    assert!(shift > 0.0, "shift must be positive");
    MopProblem::new(
        "abs_biobjective",
        2,
        vec![
            Objective::nonsmooth(
                |x: &DVector<f64>| x[0].abs() + x[1] * x[1],
                |x: &DVector<f64>| DVector::from_vec(vec![sign0(x[0]), 2.0 * x[1]]),
            ),
            Objective::nonsmooth(
                move |x: &DVector<f64>| (x[0] - shift).abs() + x[1] * x[1],
                move |x: &DVector<f64>| {
                    DVector::from_vec(vec![sign0(x[0] - shift), 2.0 * x[1]])
                },
            ),
        ],
    )
}

/// Pareto segment of [`make_abs_biobjective`].
pub fn abs_biobjective_pareto_segment(shift: f64) -> KnownSolution {
    KnownSolution::Segment {
        a: DVector::from_vec(vec![0.0, 0.0]),
        b: DVector::from_vec(vec![shift, 0.0]),
    }
}

/// The smooth least-squares loss `L(x) = ½‖Ax − b‖²` with analytic
/// gradient `Aᵀ(Ax − b)` and Hessian `AᵀA`.
#[derive(Clone)]
pub struct QuadraticObjective {
    a: DMatrix<f64>,
    b: DVector<f64>,
    hessian: DMatrix<f64>,
}

impl QuadraticObjective {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Self {
        assert_eq!(a.nrows(), b.len(), "A and b row counts must match");
        let hessian = a.transpose() * &a;
        Self { a, b, hessian }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }
}

impl SmoothObjective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * (&self.a * x - &self.b).norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.a.transpose() * (&self.a * x - &self.b)
    }

    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.hessian.clone()
    }
}

/// The regularization pair `min (L(x), ‖x‖₁)` for `L = ½‖Ax − b‖²`.
pub struct L1Instance {
    /// The smooth loss, for the continuation solver.
    pub smooth: QuadraticObjective,
    /// The same instance as a two-objective non-smooth problem.
    pub mop: MopProblem,
    /// Set when A is (numerically) rank deficient; the path may then be
    /// non-unique.
    pub rank_deficient: bool,
}

/// Builds the ℓ1-regularized least-squares instance.
///
/// The ℓ1 subgradient convention is `sign(x_i)` with `0` at zero.
pub fn make_l1_quadratic(a: &DMatrix<f64>, b: &DVector<f64>) -> L1Instance {
    let smooth = QuadraticObjective::new(a.clone(), b.clone());
    let n = a.ncols();
    let rank_deficient = {
        let sv = svd::svd_right(a).expect("SVD of the design matrix");
        let smax = sv.singular_values.first().copied().unwrap_or(0.0);
        let smin = sv.singular_values.last().copied().unwrap_or(0.0);
        smin <= 1e-10 * smax.max(1.0)
    };
    let loss = smooth.clone();
    let loss_grad = smooth.clone();
    let mop = MopProblem::new(
        "l1_quadratic",
        n,
        vec![
            Objective::smooth(
                move |x: &DVector<f64>| loss.value(x),
                move |x: &DVector<f64>| loss_grad.gradient(x),
            ),
            Objective::nonsmooth(
                |x: &DVector<f64>| x.iter().map(|v| v.abs()).sum(),
                |x: &DVector<f64>| DVector::from_iterator(x.len(), x.iter().map(|v| sign0(*v))),
            ),
        ],
    );
    L1Instance {
        smooth,
        mop,
        rank_deficient,
    }
}

/// Euclidean distance from `p` to the segment `[a, b]`.
pub fn distance_to_segment(p: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let ab = b - a;
    let denom = ab.norm_squared();
    if denom == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / denom).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{check_declared_gradients, dominates, Dominance};
    use nalgebra::dvector;

    #[test]
    fn paraboloid_matches_the_reference_instance() {
        let p = make_paraboloid(&dvector![0.0, 0.0], &dvector![1.0, 0.5]);
        assert_eq!(p.evaluate(&dvector![0.0, 0.0]).unwrap(), dvector![0.0, 1.25]);
        let g = p.objective(0).subgrad(&dvector![2.0, 1.0]);
        assert_eq!(g, dvector![4.0, 2.0]);
        check_declared_gradients(
            &p,
            &[dvector![0.3, -0.4], dvector![2.0, 1.0], dvector![-1.0, 3.0]],
        )
        .unwrap();
    }

    #[test]
    fn abs_biobjective_values_and_kink_convention() {
        let p = make_abs_biobjective(2.0);
        assert_eq!(p.evaluate(&dvector![1.0, 0.0]).unwrap(), dvector![1.0, 1.0]);
        // (−1, 0) is dominated by (0, 0).
        let fa = p.evaluate(&dvector![-1.0, 0.0]).unwrap();
        let fb = p.evaluate(&dvector![0.0, 0.0]).unwrap();
        assert_eq!(fa, dvector![1.0, 3.0]);
        assert_eq!(fb, dvector![0.0, 2.0]);
        assert_eq!(dominates(&fb, &fa).unwrap(), Dominance::Strict);
        // Kink convention: subgradient first component is 0 at the kink.
        let g = p.objective(0).subgrad(&dvector![0.0, 0.5]);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 1.0);
    }

    #[test]
    fn l1_quadratic_instances() {
        let inst = make_l1_quadratic(&DMatrix::identity(2, 2), &dvector![3.0, 1.0]);
        assert!(!inst.rank_deficient);
        assert_eq!(inst.mop.evaluate(&dvector![3.0, 1.0]).unwrap(), dvector![0.0, 4.0]);
        let scalar = make_l1_quadratic(&DMatrix::identity(1, 1), &dvector![3.0]);
        assert_eq!(
            crate::continuation::lambda_max(&scalar.smooth),
            3.0
        );
        // b = 0: the loss gradient at 0 vanishes, the path degenerates.
        let zero = make_l1_quadratic(&DMatrix::identity(2, 2), &dvector![0.0, 0.0]);
        assert_eq!(crate::continuation::lambda_max(&zero.smooth), 0.0);
        // Rank deficiency is flagged.
        let rd = make_l1_quadratic(
            &DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            &dvector![1.0, 1.0],
        );
        assert!(rd.rank_deficient);
    }

    /// Brute-force dominance filter over a grid; the declared Pareto sets must
    /// agree with it to within grid resolution.
    fn grid_pareto(p: &MopProblem, lo: [f64; 2], hi: [f64; 2], steps: [usize; 2]) -> Vec<DVector<f64>> {
        let mut pts = Vec::new();
        let mut vals: Vec<DVector<f64>> = Vec::new();
        for i in 0..=steps[0] {
            for j in 0..=steps[1] {
                let x = dvector![
                    lo[0] + (hi[0] - lo[0]) * i as f64 / steps[0] as f64,
                    lo[1] + (hi[1] - lo[1]) * j as f64 / steps[1] as f64
                ];
                let f = p.evaluate(&x).unwrap();
                pts.push(x);
                vals.push(f);
            }
        }
        // 2-objective sweep filter: sort by (f1, f2), keep strictly improving f2.
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.sort_by(|&a, &b| {
            vals[a][0]
                .partial_cmp(&vals[b][0])
                .unwrap()
                .then(vals[a][1].partial_cmp(&vals[b][1]).unwrap())
        });
        let mut front = Vec::new();
        let mut best_f2 = f64::INFINITY;
        let mut prev_f1 = f64::NEG_INFINITY;
        for idx in order {
            let f = &vals[idx];
            if f[1] < best_f2 || (f[1] == best_f2 && f[0] == prev_f1) {
                if f[1] < best_f2 {
                    best_f2 = f[1];
                    prev_f1 = f[0];
                    front.push(pts[idx].clone());
                } else if f[0] == prev_f1 {
                    front.push(pts[idx].clone());
                }
            }
        }
        front
    }

    #[test]
    fn declared_pareto_sets_agree_with_grid_dominance_filtering() {
        let cell = 4.0 / 200.0;
        let p = make_paraboloid(&dvector![0.0, 0.0], &dvector![1.0, 0.5]);
        let KnownSolution::Segment { a, b } = paraboloid_pareto_segment(
            &dvector![0.0, 0.0],
            &dvector![1.0, 0.5],
        );
        for x in grid_pareto(&p, [-2.0, -2.0], [2.0, 2.0], [200, 200]) {
            assert!(distance_to_segment(&x, &a, &b) <= 1.5 * cell);
        }

        let p = make_abs_biobjective(2.0);
        let KnownSolution::Segment { a, b } = abs_biobjective_pareto_segment(2.0);
        for x in grid_pareto(&p, [-1.0, -1.0], [3.0, 1.0], [200, 100]) {
            assert!(
                distance_to_segment(&x, &a, &b) <= 1.5 * cell,
                "off-set point {x:?}"
            );
        }
    }

    #[test]
    fn distance_to_segment_basics() {
        let a = dvector![0.0, 0.0];
        let b = dvector![1.0, 0.0];
        assert_eq!(distance_to_segment(&dvector![0.5, 0.5], &a, &b), 0.5);
        assert_eq!(distance_to_segment(&dvector![2.0, 0.0], &a, &b), 1.0);
        assert_eq!(distance_to_segment(&dvector![0.25, 0.0], &a, &b), 0.0);
    }

    #[test]
    fn catalog_lists_all_problems() {
        let names: Vec<&str> = catalog().iter().map(|e| e.name).collect();
        assert_eq!(names, vec!["paraboloid", "abs_biobjective", "l1_quadratic"]);
    }
}

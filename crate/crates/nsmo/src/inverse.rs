//! Inferring objective functions from Pareto-critical data.
//!
//! Given pairs `(x, α)` for which `Σ_i α_i ∇f_i(x) = 0` should hold, and a
//! basis `b_1..b_d`, expand `f_i = Σ_j c_ij b_j`. The stationarity conditions
//! are linear in the coefficients and stack into a homogeneous system
//! `𝓛 c = 0` with one `n`-row block per datum. The recovered coefficient
//! vector is a right-singular vector of `𝓛` for the smallest singular value
//! `s`; it certifies `‖Σ_i α_i ∇f_i(x)‖₂ ≤ s` at every datum.
//!
//! When the smallest singular value is (numerically) degenerate the null
//! space has dimension > 1; its dimension is reported and the returned
//! representative is chosen deterministically as the null vector with maximal
//! recovered gradient energy on the data, which prevents returning
//! gradient-free combinations such as constant objectives.

use std::io::BufRead;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::problem::SimplexWeights;
use crate::svd::{self, SvdError};

#[derive(Debug, Error)]
pub enum InverseError {
    #[error("empty data set")]
    EmptyData,
    #[error("datum {index} has dimension {got}, expected {expected}")]
    DatumDimension {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("datum {index} has {got} weights, expected {expected}")]
    WeightDimension {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("basis function {index} gradient deviates from finite differences by {deviation:.3e}")]
    BasisGradientMismatch { index: usize, deviation: f64 },
    #[error("CSV parse error at line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Svd(#[from] SvdError),
    #[error("invalid weights in datum {index}: {message}")]
    InvalidWeights { index: usize, message: String },
}

type ScalarFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

/// A differentiable basis function with analytic gradient.
#[derive(Clone)]
pub struct BasisFunction {
    pub label: String,
    value: ScalarFn,
    gradient: GradFn,
}

impl BasisFunction {
    pub fn new(
        label: impl Into<String>,
        value: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.gradient)(x)
    }
}

/// An ordered set of basis functions over ℝⁿ.
#[derive(Clone)]
pub struct BasisSet {
    n: usize,
    functions: Vec<BasisFunction>,
}

impl BasisSet {
    pub fn new(n: usize, functions: Vec<BasisFunction>) -> Self {
        assert!(!functions.is_empty(), "basis must be nonempty");
        Self { n, functions }
    }

    /// All monomials over ℝⁿ of total degree ≤ `degree`, graded
    /// lexicographically: 1, x₁, …, xₙ, x₁², x₁x₂, ….
    pub fn polynomial(n: usize, degree: u32) -> Self {
        let mut functions = Vec::new();
        let mut exps: Vec<Vec<u32>> = vec![vec![0; n]];
        for total in 0..=degree {
            let mut level: Vec<Vec<u32>> = Vec::new();
            fn fill(level: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, pos: usize, left: u32) {
                if pos + 1 == cur.len() {
                    cur[pos] = left;
                    level.push(cur.clone());
                    return;
                }
                for take in (0..=left).rev() {
                    cur[pos] = take;
                    fill(level, cur, pos + 1, left - take);
                }
            }
            let mut cur = vec![0u32; n];
            fill(&mut level, &mut cur, 0, total);
            if total == 0 {
                exps = level;
            } else {
                exps.extend(level);
            }
        }
        for e in exps {
            functions.push(monomial(&e));
        }
        Self { n, functions }
    }

    /// Named bases for configuration files: `poly2`, `poly3`.
    pub fn by_name(name: &str, n: usize) -> Option<Self> {
        match name {
            "poly2" => Some(Self::polynomial(n, 2)),
            "poly3" => Some(Self::polynomial(n, 3)),
            _ => None,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn function(&self, j: usize) -> &BasisFunction {
        &self.functions[j]
    }

    pub fn labels(&self) -> Vec<&str> {
        self.functions.iter().map(|f| f.label.as_str()).collect()
    }

    /// n×d matrix of basis gradients at `x` (column j = ∇b_j(x)).
    pub fn gradient_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.n, self.functions.len());
        for (j, f) in self.functions.iter().enumerate() {
            b.set_column(j, &f.gradient(x));
        }
        b
    }

    /// Validates the analytic gradients against central finite differences
    /// (1e-5 relative) at the given points.
    pub fn check_gradients(&self, points: &[DVector<f64>]) -> Result<(), InverseError> {
        for x in points {
            for (j, f) in self.functions.iter().enumerate() {
                let g = f.gradient(x);
                let fd = crate::problem::central_difference(|y| f.value(y), x);
                let dev = (&g - &fd).norm();
                if dev > 1e-5 * (1.0 + g.norm()) {
                    return Err(InverseError::BasisGradientMismatch {
                        index: j,
                        deviation: dev,
                    });
                }
            }
        }
        Ok(())
    }
}

fn monomial(exponents: &[u32]) -> BasisFunction {
    let exps = exponents.to_vec();
    let label = if exps.iter().all(|e| *e == 0) {
        "1".to_string()
    } else {
        exps.iter()
            .enumerate()
            .filter(|(_, e)| **e > 0)
            .map(|(i, e)| {
                if *e == 1 {
                    format!("x{}", i + 1)
                } else {
                    format!("x{}^{}", i + 1, e)
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    };
    let ev = exps.clone();
    let eg = exps;
    BasisFunction::new(
        label,
        move |x: &DVector<f64>| {
            ev.iter()
                .enumerate()
                .map(|(i, e)| x[i].powi(*e as i32))
                .product()
        },
        move |x: &DVector<f64>| {
            let n = x.len();
            DVector::from_fn(n, |i, _| {
                if eg[i] == 0 {
                    return 0.0;
                }
                let mut g = eg[i] as f64 * x[i].powi(eg[i] as i32 - 1);
                for (j, e) in eg.iter().enumerate() {
                    if j != i {
                        g *= x[j].powi(*e as i32);
                    }
                }
                g
            })
        },
    )
}

/// One observation: a point and the KKT multiplier it is critical with.
#[derive(Debug, Clone)]
pub struct ParetoDatum {
    pub x: DVector<f64>,
    pub alpha: SimplexWeights,
}

/// Result of the inverse problem.
#[derive(Debug, Clone)]
pub struct InverseResult {
    /// Coefficient matrix, row i = coefficients of f_i over the basis;
    /// Frobenius norm 1, first nonzero entry positive.
    pub coefficients: DMatrix<f64>,
    /// Certified bound: `‖Σ_i α_i ∇f_i(x)‖₂ ≤ s` at every datum. Equals the
    /// smallest singular value of 𝓛 whenever that value is simple.
    pub smallest_singular: f64,
    /// Per-datum KKT residuals of the recovered objectives.
    pub residuals: Vec<f64>,
    /// Number of (numerically) zero singular values of 𝓛; values > 1 signal a
    /// non-unique reconstruction.
    pub null_dimension: usize,
}

impl InverseResult {
    pub fn n_objectives(&self) -> usize {
        self.coefficients.nrows()
    }

    /// Value of the recovered objective `i` at `x`.
    pub fn recovered_value(&self, basis: &BasisSet, i: usize, x: &DVector<f64>) -> f64 {
        (0..basis.len())
            .map(|j| self.coefficients[(i, j)] * basis.function(j).value(x))
            .sum()
    }

    /// Gradient of the recovered objective `i` at `x`.
    pub fn recovered_gradient(&self, basis: &BasisSet, i: usize, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(basis.dim());
        for j in 0..basis.len() {
            let c = self.coefficients[(i, j)];
            if c != 0.0 {
                g += basis.function(j).gradient(x) * c;
            }
        }
        g
    }
}

/// Stacks the stationarity conditions into the system matrix 𝓛 of shape
/// `(|D|·n) × (k·d)`: the rows of datum `m` are
/// `Σ_i Σ_j c_ij · α_i ∂b_j/∂x_ρ (x_m) = 0`, with column `(i, j)` at
/// flattened index `i·d + j`.
pub fn assemble_system(
    data: &[ParetoDatum],
    basis: &BasisSet,
    k: usize,
) -> Result<DMatrix<f64>, InverseError> {
    if data.is_empty() {
        return Err(InverseError::EmptyData);
    }
    let n = basis.dim();
    let d = basis.len();
    for (m, datum) in data.iter().enumerate() {
        if datum.x.len() != n {
            return Err(InverseError::DatumDimension {
                index: m,
                expected: n,
                got: datum.x.len(),
            });
        }
        if datum.alpha.len() != k {
            return Err(InverseError::WeightDimension {
                index: m,
                expected: k,
                got: datum.alpha.len(),
            });
        }
    }
    let mut system = DMatrix::zeros(data.len() * n, k * d);
    for (m, datum) in data.iter().enumerate() {
        let grads = basis.gradient_matrix(&datum.x);
        for i in 0..k {
            let ai = datum.alpha.get(i);
            if ai == 0.0 {
                continue;
            }
            for j in 0..d {
                for rho in 0..n {
                    system[(m * n + rho, i * d + j)] = ai * grads[(rho, j)];
                }
            }
        }
    }
    Ok(system)
}

/// Smallest singular value of `m` with a right-singular vector, sign-fixed so
/// that the first entry above 1e-9·‖v‖∞ is positive.
pub fn smallest_singular_vector(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>), InverseError> {
    let svd = svd::svd_right(m)?;
    let (s, mut v) = svd.smallest();
    fix_sign(&mut v);
    Ok((s, v))
}

fn fix_sign(v: &mut DVector<f64>) {
    let scale = v.amax();
    if scale == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-9 * scale) {
        if *first < 0.0 {
            *v = -v.clone();
        }
    }
}

/// Relative threshold below which singular values count as zero.
fn null_threshold(singular_values: &[f64]) -> f64 {
    let smax = singular_values.first().copied().unwrap_or(0.0);
    (1e-10 * smax).max(1e-12)
}

/// Full inverse solve: assembles 𝓛, extracts the smallest-singular-value
/// right vector (deterministic representative inside a degenerate null
/// space), and certifies the per-datum residual bound.
pub fn infer(
    data: &[ParetoDatum],
    basis: &BasisSet,
    k: usize,
) -> Result<InverseResult, InverseError> {
    let system = assemble_system(data, basis, k)?;
    let svd = svd::svd_right(&system)?;
    let d = basis.len();

    let tol = null_threshold(&svd.singular_values);
    let null_dimension = svd.singular_values.iter().filter(|s| **s <= tol).count();

    let mut v = if null_dimension > 1 {
        // Maximize the recovered gradient energy Σ_m Σ_i ‖B(x_m) c_i‖² over the
        // null cluster. The energy matrix is block-diagonal: I_k ⊗ M with
        // M = Σ_m B(x_m)ᵀ B(x_m).
        let total = svd.singular_values.len();
        let cluster: Vec<usize> = (total - null_dimension..total).collect();
        let mut gram = DMatrix::zeros(d, d);
        for datum in data {
            let b = basis.gradient_matrix(&datum.x);
            gram += b.transpose() * b;
        }
        let mut reduced = DMatrix::zeros(null_dimension, null_dimension);
        let energy = |a: usize, b: usize| -> f64 {
            let va = svd.right_vectors.column(cluster[a]);
            let vb = svd.right_vectors.column(cluster[b]);
            let mut acc = 0.0;
            for i in 0..k {
                let ca = va.rows(i * d, d);
                let cb = vb.rows(i * d, d);
                acc += (ca.transpose() * &gram * cb)[(0, 0)];
            }
            acc
        };
        for a in 0..null_dimension {
            for b in 0..null_dimension {
                reduced[(a, b)] = energy(a, b);
            }
        }
        // Dominant eigenvector of the small PSD energy form by deterministic
        // power iteration; a vanishing image means every null vector is
        // gradient-free, in which case the plain smallest vector stands.
        let mut w = DVector::from_element(null_dimension, 1.0 / (null_dimension as f64).sqrt());
        let mut degenerate = false;
        for _ in 0..500 {
            let y = &reduced * &w;
            let norm = y.norm();
            if norm <= 1e-15 * (1.0 + reduced.norm()) {
                degenerate = true;
                break;
            }
            w = y / norm;
        }
        if degenerate {
            svd.smallest().1
        } else {
            let mut v = DVector::zeros(k * d);
            for (a, &col) in cluster.iter().enumerate() {
                v += svd.right_vectors.column(col) * w[a];
            }
            let norm = v.norm();
            if norm > 0.0 {
                v /= norm;
            }
            v
        }
    } else {
        svd.smallest().1
    };
    fix_sign(&mut v);

    let coefficients = DMatrix::from_fn(k, d, |i, j| v[i * d + j]);
    // Certified bound for the returned vector: ‖𝓛 v‖. For a simple smallest
    // singular value this equals σ_min.
    let smallest_singular = (&system * &v).norm();

    let mut residuals = Vec::with_capacity(data.len());
    for datum in data {
        let b = basis.gradient_matrix(&datum.x);
        let mut combo = DVector::zeros(basis.dim());
        for i in 0..k {
            let ai = datum.alpha.get(i);
            if ai == 0.0 {
                continue;
            }
            let ci = coefficients.row(i).transpose();
            combo += &b * ci * ai;
        }
        residuals.push(combo.norm());
    }

    Ok(InverseResult {
        coefficients,
        smallest_singular,
        residuals,
        null_dimension,
    })
}

/// Reads Pareto-critical data from CSV with header
/// `x_1,…,x_n,alpha_1,…,alpha_k`. Weights are validated per datum.
pub fn read_data_csv(reader: impl BufRead) -> Result<(Vec<ParetoDatum>, usize, usize), InverseError> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or(InverseError::EmptyData)?;
    let header = header.map_err(|e| InverseError::Csv {
        line: 1,
        message: e.to_string(),
    })?;
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    let n = cols.iter().take_while(|c| c.starts_with("x_")).count();
    let k = cols.len() - n;
    if n == 0 || k == 0 || !cols[n..].iter().all(|c| c.starts_with("alpha_")) {
        return Err(InverseError::Csv {
            line: 1,
            message: format!("expected header x_1..x_n,alpha_1..alpha_k, got `{header}`"),
        });
    }
    let mut data = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| InverseError::Csv {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').map(str::trim).collect();
        if fields.len() != n + k {
            return Err(InverseError::Csv {
                line: idx + 1,
                message: format!("expected {} fields, got {}", n + k, fields.len()),
            });
        }
        let parse = |s: &str, line: usize| -> Result<f64, InverseError> {
            s.parse::<f64>().map_err(|e| InverseError::Csv {
                line,
                message: format!("`{s}`: {e}"),
            })
        };
        let mut x = DVector::zeros(n);
        for (i, f) in fields[..n].iter().enumerate() {
            x[i] = parse(f, idx + 1)?;
        }
        let mut a = DVector::zeros(k);
        for (i, f) in fields[n..].iter().enumerate() {
            a[i] = parse(f, idx + 1)?;
        }
        let alpha = SimplexWeights::new(a).map_err(|e| InverseError::InvalidWeights {
            index: data.len(),
            message: e.to_string(),
        })?;
        data.push(ParetoDatum { x, alpha });
    }
    if data.is_empty() {
        return Err(InverseError::EmptyData);
    }
    Ok((data, n, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_d_basis() -> BasisSet {
        BasisSet::new(
            1,
            vec![
                BasisFunction::new("x", |x: &DVector<f64>| x[0], |_| dvector![1.0]),
                BasisFunction::new("x^2", |x: &DVector<f64>| x[0] * x[0], |x| dvector![2.0 * x[0]]),
            ],
        )
    }

    #[test]
    fn assemble_the_hand_example() {
        // One datum, n = 1, k = 1, basis {x, x²} at x = 2: gradients 1 and 4.
        let data = vec![ParetoDatum {
            x: dvector![2.0],
            alpha: SimplexWeights::uniform(1),
        }];
        let system = assemble_system(&data, &one_d_basis(), 1).unwrap();
        assert_eq!(system.nrows(), 1);
        assert_eq!(system.ncols(), 2);
        assert_eq!(system[(0, 0)], 1.0);
        assert_eq!(system[(0, 1)], 4.0);
    }

    #[test]
    fn zero_weights_blank_their_blocks() {
        let basis = BasisSet::polynomial(2, 1);
        let data = vec![ParetoDatum {
            x: dvector![0.5, -1.0],
            alpha: SimplexWeights::new(dvector![0.0, 1.0]).unwrap(),
        }];
        let system = assemble_system(&data, &basis, 2).unwrap();
        let d = basis.len();
        for j in 0..d {
            for rho in 0..2 {
                assert_eq!(system[(rho, j)], 0.0, "block i=0 must be empty");
            }
        }
        assert!(system.view((0, d), (2, d)).iter().any(|v| *v != 0.0));
    }

    #[test]
    fn empty_data_is_an_error() {
        assert!(matches!(
            assemble_system(&[], &one_d_basis(), 1),
            Err(InverseError::EmptyData)
        ));
    }

    #[test]
    fn smallest_singular_vector_examples() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let (s, v) = smallest_singular_vector(&m).unwrap();
        assert!((s - 1.0).abs() <= 1e-12);
        assert!(v[0].abs() <= 1e-12 && (v[1] - 1.0).abs() <= 1e-12);

        let m = DMatrix::from_row_slice(1, 2, &[1.0, 4.0]);
        let (s, v) = smallest_singular_vector(&m).unwrap();
        assert!(s <= 1e-14);
        let expect = dvector![4.0, -1.0] / 17.0f64.sqrt();
        assert!((v - expect).norm() <= 1e-12);
    }

    #[test]
    fn polynomial_basis_gradients_check_out() {
        let basis = BasisSet::polynomial(2, 3);
        assert_eq!(basis.len(), 10);
        basis
            .check_gradients(&[dvector![0.3, -0.7], dvector![1.2, 2.0]])
            .unwrap();
        assert_eq!(BasisSet::by_name("poly2", 2).unwrap().len(), 6);
        assert!(BasisSet::by_name("poly7", 2).is_none());
    }

    fn collinear_paraboloid_data() -> Vec<ParetoDatum> {
        // Exactly critical data of Example-type paraboloids with centers
        // c¹ = 0 and c² = (1, 0.5): x(t) = t·(1, 0.5), α = (1−t, t). All
        // points lie on one line, which leaves a gauge freedom (see below).
        [0.1, 0.3, 0.5, 0.7, 0.9]
            .iter()
            .map(|&t| ParetoDatum {
                x: dvector![t, 0.5 * t],
                alpha: SimplexWeights::new(dvector![1.0 - t, t]).unwrap(),
            })
            .collect()
    }

    /// Degree-2 monomials without the constant (d = 5).
    fn poly2_no_constant() -> BasisSet {
        let full = BasisSet::polynomial(2, 2);
        let funcs: Vec<BasisFunction> = (1..full.len()).map(|j| full.function(j).clone()).collect();
        BasisSet::new(2, funcs)
    }

    /// Identifiable instance: three quadratics with pairwise different
    /// anisotropic Hessians, so critical points x(α) are rational (not
    /// affine) in α and general-position data pin the objectives down up to
    /// constants.
    fn anisotropic_data() -> (Vec<ParetoDatum>, Vec<DMatrix<f64>>, Vec<DVector<f64>>) {
        let hessians = vec![
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]),
            DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 2.0]),
            DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]),
        ];
        let centers = vec![dvector![0.0, 0.0], dvector![1.0, 0.0], dvector![0.5, 1.0]];
        let alphas = [
            [0.6, 0.3, 0.1],
            [0.2, 0.5, 0.3],
            [0.1, 0.2, 0.7],
            [0.4, 0.4, 0.2],
            [0.3, 0.1, 0.6],
            [0.25, 0.35, 0.4],
            [0.5, 0.2, 0.3],
            [0.15, 0.45, 0.4],
        ];
        let data = alphas
            .iter()
            .map(|a| {
                // KKT: Σ αᵢ Hᵢ (x − cᵢ) = 0.
                let mut lhs = DMatrix::zeros(2, 2);
                let mut rhs = DVector::zeros(2);
                for i in 0..3 {
                    lhs += &hessians[i] * a[i];
                    rhs += &hessians[i] * &centers[i] * a[i];
                }
                let x = lhs.full_piv_lu().solve(&rhs).unwrap();
                ParetoDatum {
                    x,
                    alpha: SimplexWeights::new(dvector![a[0], a[1], a[2]]).unwrap(),
                }
            })
            .collect();
        (data, hessians, centers)
    }

    #[test]
    fn exact_recovery_on_an_identifiable_instance() {
        let basis = BasisSet::polynomial(2, 2);
        let (data, hessians, centers) = anisotropic_data();
        let result = infer(&data, &basis, 3).unwrap();
        assert!(result.smallest_singular <= 1e-10);
        // Null space: exactly the three constant directions plus the truth.
        assert_eq!(result.null_dimension, 4);
        for datum in &data {
            for i in 0..3 {
                let g = result.recovered_gradient(&basis, i, &datum.x);
                let truth = &hessians[i] * (&datum.x - &centers[i]);
                let cosine = g.dot(&truth) / (g.norm() * truth.norm());
                assert!(
                    cosine >= 1.0 - 1e-8,
                    "objective {i}: gradient not parallel, cos = {cosine}"
                );
            }
        }
        for r in &result.residuals {
            assert!(*r <= result.smallest_singular + 1e-10);
        }
    }

    #[test]
    fn collinear_data_certify_but_leave_a_gauge_freedom() {
        // On the line x(t) = t·u the KKT rows are evaluations of two
        // quadratics in t, so 𝓛 has rank 6 and a 6-dimensional null space:
        // constants (2), quadratics whose gradients vanish on the line (2),
        // the truth, and the pair (x₁², x₁² − 2x₁). Every null vector yields
        // recovered gradients 2t·w and 2(t−1)·w for some fixed w.
        let basis = BasisSet::polynomial(2, 2);
        let data = collinear_paraboloid_data();
        let result = infer(&data, &basis, 2).unwrap();
        assert!(result.smallest_singular <= 1e-10);
        assert_eq!(result.null_dimension, 6);
        for r in &result.residuals {
            assert!(*r <= result.smallest_singular + 1e-10);
        }
        // The gauge structure: one shared direction w across all data.
        let t0 = 0.1;
        let w = result.recovered_gradient(&basis, 0, &data[0].x) / (2.0 * t0);
        assert!(w.norm() > 1e-6, "energy rule must not return gradient-free objectives");
        for (datum, &t) in data.iter().zip([0.1, 0.3, 0.5, 0.7, 0.9].iter()) {
            let g1 = result.recovered_gradient(&basis, 0, &datum.x);
            let g2 = result.recovered_gradient(&basis, 1, &datum.x);
            assert!((g1 - &w * (2.0 * t)).norm() <= 1e-8);
            assert!((g2 - &w * (2.0 * (t - 1.0))).norm() <= 1e-8);
        }
    }

    #[test]
    fn true_coefficients_lie_in_the_recovered_null_space() {
        let basis = poly2_no_constant();
        // Order: x1, x2, x1^2, x1*x2, x2^2.
        // f1 = x1² + x2², f2 = (x1−1)² + (x2−0.5)² up to its constant.
        let mut c_true = DVector::zeros(10);
        c_true[2] = 1.0;
        c_true[4] = 1.0;
        c_true[5] = -2.0;
        c_true[6] = -1.0;
        c_true[7] = 1.0;
        c_true[9] = 1.0;
        c_true /= c_true.norm();
        let system = assemble_system(&collinear_paraboloid_data(), &basis, 2).unwrap();
        assert!((&system * &c_true).norm() <= 1e-12, "constructed c is critical");
        // Project the truth onto the span of the near-zero singular vectors.
        let svd = crate::svd::svd_right(&system).unwrap();
        let smax = svd.singular_values[0];
        let mut projection = DVector::zeros(10);
        for (j, s) in svd.singular_values.iter().enumerate() {
            if *s <= 1e-10 * smax {
                let col = svd.right_vectors.column(j);
                projection += col * col.dot(&c_true);
            }
        }
        assert!((projection - &c_true).norm() <= 1e-8);
    }

    #[test]
    fn perturbed_multipliers_break_criticality() {
        // General-position points with random multipliers: nothing is
        // critical, so no coefficient vector can be certified.
        let basis = poly2_no_constant();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let data: Vec<ParetoDatum> = (0..8)
            .map(|_| {
                let w = rng.random_range(0.05..0.95);
                ParetoDatum {
                    x: dvector![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                    alpha: SimplexWeights::new(dvector![w, 1.0 - w]).unwrap(),
                }
            })
            .collect();
        let result = infer(&data, &basis, 2).unwrap();
        assert!(
            result.smallest_singular >= 1e-2,
            "non-critical data must not be certified: s = {}",
            result.smallest_singular
        );
    }

    #[test]
    fn single_datum_with_its_own_center() {
        let x0 = dvector![0.7, -0.2];
        let basis = BasisSet::new(
            2,
            vec![BasisFunction::new(
                "dist2",
                {
                    let c = x0.clone();
                    move |x: &DVector<f64>| (x - &c).norm_squared()
                },
                {
                    let c = x0.clone();
                    move |x: &DVector<f64>| (x - &c) * 2.0
                },
            )],
        );
        let data = vec![ParetoDatum {
            x: x0,
            alpha: SimplexWeights::uniform(1),
        }];
        let result = infer(&data, &basis, 1).unwrap();
        assert!(result.smallest_singular <= 1e-12);
        assert!((result.coefficients[(0, 0)] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn scale_invariance_of_the_singular_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = DMatrix::from_fn(8, 5, |_, _| rng.random_range(-1.0..1.0));
        let (s, v) = smallest_singular_vector(&m).unwrap();
        let scaled = &m * 7.5;
        let (s2, v2) = smallest_singular_vector(&scaled).unwrap();
        assert!((s2 - 7.5 * s).abs() <= 1e-9 * (1.0 + s2));
        assert!((v2.dot(&v).abs() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn csv_round_trip() {
        let text = "x_1,x_2,alpha_1,alpha_2\n0.1,0.05,0.9,0.1\n0.5,0.25,0.5,0.5\n";
        let (data, n, k) = read_data_csv(text.as_bytes()).unwrap();
        assert_eq!((n, k), (2, 2));
        assert_eq!(data.len(), 2);
        assert_eq!(data[1].x, dvector![0.5, 0.25]);
        assert_eq!(data[1].alpha.as_vector(), &dvector![0.5, 0.5]);

        let bad = "x_1,weird\n0.0,1.0\n";
        assert!(matches!(
            read_data_csv(bad.as_bytes()),
            Err(InverseError::Csv { line: 1, .. })
        ));
        let bad_weights = "x_1,alpha_1,alpha_2\n0.0,0.9,0.3\n";
        assert!(matches!(
            read_data_csv(bad_weights.as_bytes()),
            Err(InverseError::InvalidWeights { .. })
        ));
    }
}

//! Minimum-norm point in the convex hull of a finite vector set.
//!
//! This is the inner subproblem of the descent method: the steepest-descent
//! direction is the negative of the minimum-norm element of the convex hull of
//! the current subgradient bundle, and `0 ∈ conv(W)` (criticality) is
//! equivalent to that element vanishing.
//!
//! The solver is Wolfe's active-set scheme: maintain a corral (affinely
//! independent subset) whose affine minimizer has nonnegative weights, add the
//! generator most opposed to the current point (major cycle), and walk back
//! onto the hull while deleting generators whose weight hits zero (minor
//! cycle). Problem sizes here are tiny — a handful of subgradients — so exact
//! corral solves with full-pivot LU are cheap and termination is finite.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::problem::SimplexWeights;

#[derive(Debug, Error)]
pub enum MinNormError {
    #[error("empty generator list")]
    EmptyGenerators,
    #[error("generator {index} has a non-finite entry")]
    NonFinite { index: usize },
    #[error("generators have inconsistent dimensions")]
    DimensionMismatch,
    #[error("corral system became singular")]
    SingularCorral,
    #[error("iteration budget exhausted")]
    BudgetExhausted,
}

/// Solution of the hull QP: the minimizer of `‖ξ‖₂²` over `conv(generators)`.
#[derive(Debug, Clone)]
pub struct HullQpResult {
    /// The minimum-norm point ξ*.
    pub point: DVector<f64>,
    /// Certifying convex weights over the original generator list.
    pub weights: SimplexWeights,
    /// Major cycles used.
    pub iterations: usize,
}

/// Weights below this are treated as zero when walking back onto the hull.
const WEIGHT_TOL: f64 = 1e-12;
/// Duplicate generators within this (max-abs) distance are merged upfront.
const DEDUP_TOL: f64 = 1e-14;

/// Minimum-norm point of `conv(generators)` with certifying simplex weights.
///
/// The result satisfies the variational optimality condition
/// `⟨ξ*, g − ξ*⟩ ≥ 0` for every generator `g` (up to round-off).
pub fn min_norm_point(generators: &[DVector<f64>]) -> Result<HullQpResult, MinNormError> {
    if generators.is_empty() {
        return Err(MinNormError::EmptyGenerators);
    }
    let n = generators[0].len();
    for (i, g) in generators.iter().enumerate() {
        if g.len() != n {
            return Err(MinNormError::DimensionMismatch);
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(MinNormError::NonFinite { index: i });
        }
    }

    // Deduplicate near-identical generators; duplicates would make corrals
    // affinely dependent. `rep_of[i]` maps each original index to the index of
    // its representative inside `reps`.
    let mut reps: Vec<usize> = Vec::new();
    let mut rep_of: Vec<usize> = vec![0; generators.len()];
    for (i, g) in generators.iter().enumerate() {
        let found = reps.iter().position(|&r| {
            generators[r]
                .iter()
                .zip(g.iter())
                .all(|(a, b)| (a - b).abs() <= DEDUP_TOL)
        });
        match found {
            Some(pos) => rep_of[i] = pos,
            None => {
                rep_of[i] = reps.len();
                reps.push(i);
            }
        }
    }
    let pts: Vec<&DVector<f64>> = reps.iter().map(|&r| &generators[r]).collect();

    // Start from the shortest generator (lowest index on ties).
    let mut start = 0usize;
    let mut best = pts[0].norm_squared();
    for (j, p) in pts.iter().enumerate().skip(1) {
        let ns = p.norm_squared();
        if ns < best {
            best = ns;
            start = j;
        }
    }

    let mut corral: Vec<usize> = vec![start];
    let mut corral_w: Vec<f64> = vec![1.0];
    let mut x = pts[start].clone();
    let mut iterations = 0usize;

    let max_major = 100 * (pts.len() + 1) * (n + 1);
    'major: for _ in 0..max_major {
        iterations += 1;

        // Most opposed generator: argmin ⟨x, p_j⟩, lowest index on ties.
        let mut j_star = 0usize;
        let mut best_ip = f64::INFINITY;
        for (j, p) in pts.iter().enumerate() {
            let ip = x.dot(p);
            if ip < best_ip {
                best_ip = ip;
                j_star = j;
            }
        }
        let xx = x.norm_squared();
        if best_ip >= xx - 1e-12 * (1.0 + xx) {
            break 'major; // optimal: ⟨x, p − x⟩ ≥ 0 for all generators
        }
        if corral.contains(&j_star) {
            break 'major; // no progress possible beyond round-off
        }
        corral.push(j_star);
        corral_w.push(0.0);

        // Minor cycle: move to the affine minimizer over the corral, walking
        // back and deleting zero-weight members until all weights are positive.
        loop {
            let u = match affine_min_norm_weights(&pts, &corral) {
                Some(u) => u,
                None => {
                    // Affinely dependent corral: drop the newest member.
                    corral.pop();
                    corral_w.pop();
                    if corral.is_empty() {
                        return Err(MinNormError::SingularCorral);
                    }
                    break;
                }
            };
            if u.iter().all(|&ui| ui > WEIGHT_TOL) {
                corral_w = u;
                x = combine(&pts, &corral, &corral_w, n);
                break;
            }
            // θ = min over decreasing-to-zero coordinates of w/(w − u).
            let mut theta = 1.0f64;
            for (wi, ui) in corral_w.iter().zip(u.iter()) {
                if *ui <= WEIGHT_TOL {
                    let denom = wi - ui;
                    if denom > 0.0 {
                        theta = theta.min(wi / denom);
                    }
                }
            }
            let mut next_w: Vec<f64> = corral_w
                .iter()
                .zip(u.iter())
                .map(|(w, u)| (1.0 - theta) * w + theta * u)
                .collect();
            // Remove members whose weight vanished (keep at least one).
            let mut keep: Vec<usize> = Vec::with_capacity(corral.len());
            for (idx, w) in next_w.iter().enumerate() {
                if *w > WEIGHT_TOL {
                    keep.push(idx);
                }
            }
            if keep.is_empty() {
                keep.push(0);
                next_w[0] = 1.0;
            }
            corral = keep.iter().map(|&i| corral[i]).collect();
            corral_w = keep.iter().map(|&i| next_w[i]).collect();
            let total: f64 = corral_w.iter().sum();
            for w in corral_w.iter_mut() {
                *w /= total;
            }
            x = combine(&pts, &corral, &corral_w, n);
        }
    }

    // Expand weights back to the original indexing (representatives carry the
    // mass; duplicates get zero) and rebuild the point from them exactly.
    let mut weights = DVector::zeros(generators.len());
    for (pos, w) in corral.iter().zip(corral_w.iter()) {
        weights[reps[*pos]] = *w;
    }
    let weights =
        SimplexWeights::normalized(weights).map_err(|_| MinNormError::SingularCorral)?;
    let mut point = DVector::zeros(n);
    for (i, g) in generators.iter().enumerate() {
        point += g * weights.get(i);
    }
    Ok(HullQpResult {
        point,
        weights,
        iterations,
    })
}

/// `0 ∈ conv(generators)` up to `tol`, via the hull QP.
pub fn contains_origin(generators: &[DVector<f64>], tol: f64) -> Result<bool, MinNormError> {
    Ok(min_norm_point(generators)?.point.norm() <= tol)
}

fn combine(pts: &[&DVector<f64>], idx: &[usize], w: &[f64], n: usize) -> DVector<f64> {
    let mut x = DVector::zeros(n);
    for (j, wi) in idx.iter().zip(w.iter()) {
        x += pts[*j] * *wi;
    }
    x
}

/// Affine minimizer weights of `‖Σ u_i s_i‖²` subject to `Σ u_i = 1` over the
/// corral, via the bordered Gram system. Returns `None` when the system is
/// numerically singular (affinely dependent corral).
fn affine_min_norm_weights(pts: &[&DVector<f64>], corral: &[usize]) -> Option<Vec<f64>> {
    let s = corral.len();
    if s == 1 {
        return Some(vec![1.0]);
    }
    let mut m = DMatrix::zeros(s + 1, s + 1);
    for a in 0..s {
        m[(0, a + 1)] = 1.0;
        m[(a + 1, 0)] = 1.0;
        for b in 0..s {
            m[(a + 1, b + 1)] = pts[corral[a]].dot(pts[corral[b]]);
        }
    }
    let mut rhs = DVector::zeros(s + 1);
    rhs[0] = 1.0;
    let lu = m.full_piv_lu();
    let sol = lu.solve(&rhs)?;
    let u: Vec<f64> = sol.iter().skip(1).copied().collect();
    if u.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(u)
}

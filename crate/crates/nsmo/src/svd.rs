//! Dense SVD restricted to what the inverse problem needs: singular values
//! and right-singular vectors.
//!
//! Golub–Kahan: Householder bidiagonalization followed by implicit-shift QR
//! on the bidiagonal. Left transforms are applied but never accumulated.
//! Matrices with fewer rows than columns are padded with zero rows — that
//! leaves `MᵀM` unchanged, so the right-singular structure (including any
//! null space) is preserved and smallest singular values of 0 come out for
//! genuinely rank-deficient column spaces.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SvdError {
    #[error("empty matrix")]
    Empty,
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("QR iteration failed to converge")]
    NonConvergence,
}

/// Singular values (descending) and the matching right-singular vectors
/// (columns of an orthogonal n×n matrix).
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    pub right_vectors: DMatrix<f64>,
}

impl SvdResult {
    /// The smallest singular value with its right-singular vector.
    pub fn smallest(&self) -> (f64, DVector<f64>) {
        let last = self.singular_values.len() - 1;
        (
            self.singular_values[last],
            self.right_vectors.column(last).into_owned(),
        )
    }
}

/// Givens rotation (c, s) with c·a + s·b = r and −s·a + c·b = 0.
fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else if a == 0.0 {
        (0.0, 1.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

/// Full right-singular decomposition of `a`.
pub fn svd_right(a: &DMatrix<f64>) -> Result<SvdResult, SvdError> {
    let m0 = a.nrows();
    let n = a.ncols();
    if m0 == 0 || n == 0 {
        return Err(SvdError::Empty);
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(SvdError::NonFinite);
    }
    let m = m0.max(n);
    let mut work = DMatrix::<f64>::zeros(m, n);
    work.view_mut((0, 0), (m0, n)).copy_from(a);
    let mut v = DMatrix::<f64>::identity(n, n);
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n.saturating_sub(1)];

    bidiagonalize(&mut work, &mut v, &mut d, &mut e);
    bidiagonal_qr(&mut d, &mut e, &mut v)?;

    // Singular values are |d|; right vectors are unaffected by the sign.
    for di in d.iter_mut() {
        *di = di.abs();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap());
    let singular_values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut right = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        right.set_column(dst, &v.column(src));
    }
    Ok(SvdResult {
        singular_values,
        right_vectors: right,
    })
}

/// Singular values of `a`, descending.
pub fn singular_values(a: &DMatrix<f64>) -> Result<Vec<f64>, SvdError> {
    Ok(svd_right(a)?.singular_values)
}

/// Householder reduction of `work` (m ≥ n) to upper bidiagonal form,
/// accumulating the right transforms into `v`. Diagonal lands in `d`,
/// superdiagonal in `e`.
fn bidiagonalize(work: &mut DMatrix<f64>, v: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64]) {
    let m = work.nrows();
    let n = work.ncols();
    for k in 0..n {
        // Left reflection: zero work[k+1.., k].
        let mut norm_sq = 0.0;
        for i in k..m {
            norm_sq += work[(i, k)] * work[(i, k)];
        }
        if norm_sq > 0.0 {
            let norm = norm_sq.sqrt();
            let akk = work[(k, k)];
            let sigma = if akk >= 0.0 { norm } else { -norm };
            let v0 = akk + sigma;
            if v0.abs() > 0.0 {
                work[(k, k)] = v0;
                for i in (k + 1)..m {
                    work[(i, k)] /= v0;
                }
                let tau = v0 / sigma;
                for j in (k + 1)..n {
                    let mut dot = work[(k, j)];
                    for i in (k + 1)..m {
                        dot += work[(i, k)] * work[(i, j)];
                    }
                    dot *= tau;
                    work[(k, j)] -= dot;
                    for i in (k + 1)..m {
                        let w = work[(i, k)];
                        work[(i, j)] -= dot * w;
                    }
                }
            }
            d[k] = -sigma;
        } else {
            d[k] = 0.0;
        }

        if k + 1 >= n {
            continue;
        }
        // Right reflection: zero work[k, k+2..]; accumulate into v.
        if k + 2 < n {
            let mut norm_sq = 0.0;
            for j in (k + 1)..n {
                norm_sq += work[(k, j)] * work[(k, j)];
            }
            if norm_sq > 0.0 {
                let norm = norm_sq.sqrt();
                let ak1 = work[(k, k + 1)];
                let sigma = if ak1 >= 0.0 { norm } else { -norm };
                let v0 = ak1 + sigma;
                if v0.abs() > 0.0 {
                    work[(k, k + 1)] = v0;
                    for j in (k + 2)..n {
                        work[(k, j)] /= v0;
                    }
                    let tau = v0 / sigma;
                    for i in (k + 1)..m {
                        let mut dot = work[(i, k + 1)];
                        for j in (k + 2)..n {
                            dot += work[(i, j)] * work[(k, j)];
                        }
                        dot *= tau;
                        work[(i, k + 1)] -= dot;
                        for j in (k + 2)..n {
                            let w = work[(k, j)];
                            work[(i, j)] -= dot * w;
                        }
                    }
                    for row in 0..n {
                        let mut dot = v[(row, k + 1)];
                        for j in (k + 2)..n {
                            dot += v[(row, j)] * work[(k, j)];
                        }
                        dot *= tau;
                        v[(row, k + 1)] -= dot;
                        for j in (k + 2)..n {
                            let w = work[(k, j)];
                            v[(row, j)] -= dot * w;
                        }
                    }
                }
                e[k] = -sigma;
            } else {
                e[k] = 0.0;
            }
        } else {
            e[k] = work[(k, k + 1)];
        }
    }
}

/// Implicit-shift QR on the bidiagonal (d, e), accumulating right rotations
/// into `v`. Left rotations only touch d/e.
fn bidiagonal_qr(d: &mut [f64], e: &mut [f64], v: &mut DMatrix<f64>) -> Result<(), SvdError> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let max_iter = 60 * n * n + 200;
    let mut iter = 0usize;
    let mut hi = n - 1;

    while hi > 0 {
        // Deflate a negligible trailing off-diagonal.
        let threshold = eps * (d[hi - 1].abs() + d[hi].abs()) + f64::MIN_POSITIVE;
        if e[hi - 1].abs() <= threshold {
            e[hi - 1] = 0.0;
            hi -= 1;
            continue;
        }
        // Start of the unreduced block.
        let mut lo = hi - 1;
        while lo > 0 {
            let t = eps * (d[lo - 1].abs() + d[lo].abs()) + f64::MIN_POSITIVE;
            if e[lo - 1].abs() <= t {
                e[lo - 1] = 0.0;
                break;
            }
            lo -= 1;
        }

        iter += 1;
        if iter > max_iter {
            return Err(SvdError::NonConvergence);
        }

        // A (near-)zero diagonal entry breaks the shift. Inside the block the
        // adjacent off-diagonal is chased out with left rotations; at the
        // block's end it is chased upward with right (column) rotations,
        // which must be accumulated into V. Either way the block decouples.
        let block_scale = (lo..=hi)
            .map(|i| d[i].abs())
            .chain((lo..hi).map(|i| e[i].abs()))
            .fold(0.0f64, f64::max);
        if d[hi].abs() <= eps * block_scale {
            d[hi] = 0.0;
            let mut f = e[hi - 1];
            e[hi - 1] = 0.0;
            for k in (lo..hi).rev() {
                let (c, s) = givens(d[k], f);
                d[k] = c * d[k] + s * f;
                for row in 0..v.nrows() {
                    let vk = v[(row, k)];
                    let vh = v[(row, hi)];
                    v[(row, k)] = c * vk + s * vh;
                    v[(row, hi)] = c * vh - s * vk;
                }
                if k > lo {
                    f = -s * e[k - 1];
                    e[k - 1] *= c;
                }
            }
            continue;
        }
        let mut split = false;
        for idx in lo..hi {
            if d[idx].abs() <= eps * block_scale {
                d[idx] = 0.0;
                let mut z = e[idx];
                e[idx] = 0.0;
                for j in (idx + 1)..=hi {
                    let (c, s) = givens(d[j], z);
                    d[j] = c * d[j] + s * z;
                    if j < hi {
                        z = -s * e[j];
                        e[j] *= c;
                    }
                }
                split = true;
                break;
            }
        }
        if split {
            continue;
        }

        // Wilkinson shift from the trailing 2×2 of BᵀB.
        let d_hi = d[hi];
        let d_h1 = d[hi - 1];
        let e_h1 = e[hi - 1];
        let e_h2 = if hi >= 2 && hi - 2 >= lo { e[hi - 2] } else { 0.0 };
        let t11 = d_h1 * d_h1 + e_h2 * e_h2;
        let t12 = d_h1 * e_h1;
        let t22 = d_hi * d_hi + e_h1 * e_h1;
        let delta = (t11 - t22) / 2.0;
        let sign = if delta >= 0.0 { 1.0 } else { -1.0 };
        let mu = t22 - t12 * t12 / (delta + sign * (delta * delta + t12 * t12).sqrt());

        // Bulge chase.
        let mut x = d[lo] * d[lo] - mu;
        let mut z = d[lo] * e[lo];
        for k in lo..hi {
            let (c, s) = givens(x, z);
            if k > lo {
                e[k - 1] = c * x + s * z;
            }
            let dk = d[k];
            let ek = e[k];
            let dk1 = d[k + 1];
            d[k] = c * dk + s * ek;
            e[k] = c * ek - s * dk;
            let bulge = s * dk1;
            d[k + 1] = c * dk1;
            for row in 0..v.nrows() {
                let vk = v[(row, k)];
                let vk1 = v[(row, k + 1)];
                v[(row, k)] = c * vk + s * vk1;
                v[(row, k + 1)] = c * vk1 - s * vk;
            }
            let (c2, s2) = givens(d[k], bulge);
            d[k] = c2 * d[k] + s2 * bulge;
            let old_ek = e[k];
            let old_dk1 = d[k + 1];
            e[k] = c2 * old_ek + s2 * old_dk1;
            d[k + 1] = c2 * old_dk1 - s2 * old_ek;
            if k + 1 < hi {
                let old_ek1 = e[k + 1];
                x = e[k];
                z = s2 * old_ek1;
                e[k + 1] = c2 * old_ek1;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Smallest eigenvalue of the Gram matrix MᵀM via shifted power iteration
    /// (independent of the bidiagonal QR path).
    pub(crate) fn gram_lambda_min(m: &DMatrix<f64>) -> f64 {
        let g = m.transpose() * m;
        let n = g.nrows();
        // Gershgorin upper bound on the spectrum.
        let mut mu = 0.0f64;
        for i in 0..n {
            let row_sum: f64 = (0..n).map(|j| g[(i, j)].abs()).sum();
            mu = mu.max(row_sum);
        }
        let shifted = DMatrix::identity(n, n) * mu - &g;
        let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        let mut nu = 0.0;
        for _ in 0..20_000 {
            let y = &shifted * &x;
            let norm = y.norm();
            if norm == 0.0 {
                return mu;
            }
            x = y / norm;
            nu = x.dot(&(&shifted * &x));
        }
        mu - nu
    }

    #[test]
    fn diagonal_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let svd = svd_right(&m).unwrap();
        assert!((svd.singular_values[0] - 3.0).abs() <= 1e-12);
        assert!((svd.singular_values[1] - 1.0).abs() <= 1e-12);
        let (s, vmin) = svd.smallest();
        assert!((s - 1.0).abs() <= 1e-12);
        assert!((vmin[1].abs() - 1.0).abs() <= 1e-12 && vmin[0].abs() <= 1e-12);
    }

    #[test]
    fn wide_matrix_null_vector() {
        // [1, 4] has the one-dimensional null space spanned by (4,−1)/√17.
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 4.0]);
        let svd = svd_right(&m).unwrap();
        let (s, vmin) = svd.smallest();
        assert!(s <= 1e-14, "s = {s}");
        let expect = DVector::from_vec(vec![4.0, -1.0]) / 17.0f64.sqrt();
        let aligned = vmin.dot(&expect).abs();
        assert!((aligned - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn random_matrices_match_the_gram_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let rows = rng.random_range(2..=12usize);
            let cols = rng.random_range(2..=8usize);
            let m = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-2.0..2.0));
            let svd = svd_right(&m).unwrap();
            let (s, vmin) = svd.smallest();
            // ‖Mv‖ = s.
            assert!(((&m * &vmin).norm() - s).abs() <= 1e-10 * (1.0 + m.norm()));
            // s² equals the Gram λ_min from the independent oracle.
            let lam = gram_lambda_min(&m);
            assert!(
                (s * s - lam).abs() <= 1e-8,
                "trial {trial}: s²={} gram={lam}",
                s * s
            );
            // Right vectors orthonormal.
            let vtv = svd.right_vectors.transpose() * &svd.right_vectors;
            assert!((vtv - DMatrix::identity(cols, cols)).norm() <= 1e-10);
            // Descending order and reconstruction of every singular value.
            for w in svd.singular_values.windows(2) {
                assert!(w[0] >= w[1] - 1e-14);
            }
            for (j, sv) in svd.singular_values.iter().enumerate() {
                let col = svd.right_vectors.column(j).into_owned();
                assert!(((&m * &col).norm() - sv).abs() <= 1e-9 * (1.0 + m.norm()));
            }
        }
    }

    #[test]
    fn rank_deficient_tall_matrix() {
        // Second column is twice the first.
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, -2.0, 0.5, 1.0]);
        let svd = svd_right(&m).unwrap();
        let (s, vmin) = svd.smallest();
        assert!(s <= 1e-12);
        let expect = DVector::from_vec(vec![2.0, -1.0]) / 5.0f64.sqrt();
        assert!((vmin.dot(&expect).abs() - 1.0).abs() <= 1e-10);
    }
}

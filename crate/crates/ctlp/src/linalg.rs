//! Dense real linear algebra for the certification machinery.
//!
//! Everything here targets the tiny matrices this crate produces (a handful
//! of rows and columns), so the SVD is a one-sided Jacobi iteration and
//! determinants go through LU with partial pivoting. Accuracy, not speed.

use crate::error::{Error, Result};

/// Relative cutoff for numerical rank: singular values below
/// `RANK_TOL * sigma_1` count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Pivot threshold (relative to the matrix norm) below which LU declares
/// singularity.
pub const LU_SINGULAR_TOL: f64 = 1e-12;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::input("matrix needs at least one row"));
        }
        let cols = rows[0].len();
        if cols == 0 {
            return Err(Error::input("matrix needs at least one column"));
        }
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::input("ragged rows"));
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::input(format!(
                "expected {} entries for {rows}x{cols}, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Max absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::input(format!(
                "dimension mismatch in matmul: {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::input("dimension mismatch in matrix-vector product"));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `A^T x`.
    pub fn t_mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::input("dimension mismatch in transposed product"));
        }
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j] += self.get(i, j) * x[i];
            }
        }
        Ok(out)
    }

    /// The Gram matrix `M M^T`.
    pub fn gram(&self) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in i..self.rows {
                let v: f64 = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .map(|(a, b)| a * b)
                    .sum();
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    /// Submatrix keeping the listed rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(idx.len(), self.cols);
        for (r, &i) in idx.iter().enumerate() {
            for j in 0..self.cols {
                out.set(r, j, self.get(i, j));
            }
        }
        out
    }
}

/// Singular value decomposition `M = U diag(sigma) V^T`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// rows x rows orthogonal factor.
    pub u: DenseMatrix,
    /// Non-increasing singular values, `min(rows, cols)` of them.
    pub sigma: Vec<f64>,
    /// cols x cols orthogonal factor.
    pub v: DenseMatrix,
    /// Count of singular values above `RANK_TOL * sigma_1`.
    pub rank: usize,
}

/// One-sided Jacobi on the columns of `a` (requires rows >= cols).
/// Returns (U rows x rows, sigma len cols, V cols x cols).
fn jacobi_tall(a: &DenseMatrix) -> (DenseMatrix, Vec<f64>, DenseMatrix) {
    let m = a.rows();
    let n = a.cols();
    debug_assert!(m >= n);
    let mut w = a.clone();
    let mut v = DenseMatrix::identity(n);

    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..m {
                    let wp = w.get(i, p);
                    let wq = w.get(i, q);
                    app += wp * wp;
                    aqq += wq * wq;
                    apq += wp * wq;
                }
                if apq.abs() <= f64::EPSILON * (app * aqq).sqrt() || apq == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let tan = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cos = 1.0 / (1.0 + tan * tan).sqrt();
                let sin = cos * tan;
                for i in 0..m {
                    let wp = w.get(i, p);
                    let wq = w.get(i, q);
                    w.set(i, p, cos * wp - sin * wq);
                    w.set(i, q, sin * wp + cos * wq);
                }
                for i in 0..n {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v.set(i, p, cos * vp - sin * vq);
                    v.set(i, q, sin * vp + cos * vq);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // Column norms are the singular values; sort them non-increasing and
    // permute V (and the normalized columns of W) along.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w.get(i, j).powi(2)).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap());

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let sigma_max = sigma.first().copied().unwrap_or(0.0);

    let mut v_sorted = DenseMatrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            v_sorted.set(i, new_j, v.get(i, old_j));
        }
    }

    // Left factor: normalized columns where the norm is trustworthy, then
    // complete to a full orthonormal basis of R^m.
    let mut u = DenseMatrix::zeros(m, m);
    let mut filled = vec![false; m];
    for (new_j, &old_j) in order.iter().enumerate() {
        if sigma[new_j] > sigma_max * 1e-15 && sigma[new_j] > 0.0 {
            for i in 0..m {
                u.set(i, new_j, w.get(i, old_j) / sigma[new_j]);
            }
            filled[new_j] = true;
        }
    }
    complete_orthonormal(&mut u, &mut filled);

    (u, sigma, v_sorted)
}

/// Fill unfilled columns of `u` with unit vectors orthogonal to the filled
/// ones. Candidates come from the standard basis; the one with the largest
/// orthogonal component wins (its norm is at least 1/sqrt(m)).
fn complete_orthonormal(u: &mut DenseMatrix, filled: &mut [bool]) {
    let m = u.rows();
    let orthogonalize = |u: &DenseMatrix, filled: &[bool], cand: &mut [f64]| {
        // two passes for stability
        for _ in 0..2 {
            for jj in 0..m {
                if !filled[jj] {
                    continue;
                }
                let dot: f64 = (0..m).map(|i| cand[i] * u.get(i, jj)).sum();
                for (i, c) in cand.iter_mut().enumerate() {
                    *c -= dot * u.get(i, jj);
                }
            }
        }
    };
    for j in 0..m {
        if filled[j] {
            continue;
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for k in 0..m {
            let mut cand = vec![0.0; m];
            cand[k] = 1.0;
            orthogonalize(u, filled, &mut cand);
            let norm = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, cand));
            }
        }
        let (norm, mut col) = best.expect("at least one candidate");
        assert!(
            norm > 1e-3,
            "orthonormal completion degenerated (norm {norm:e})"
        );
        for c in col.iter_mut() {
            *c /= norm;
        }
        // one more pass after normalization keeps orthogonality tight
        orthogonalize(u, filled, &mut col);
        let norm2 = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (i, c) in col.iter().enumerate() {
            u.set(i, j, c / norm2);
        }
        filled[j] = true;
    }
}

/// Singular value decomposition via one-sided Jacobi.
pub fn svd(m: &DenseMatrix) -> Result<SvdResult> {
    if !m.is_finite() {
        return Err(Error::input("svd: non-finite entries"));
    }
    let (u, sigma, v) = if m.rows() >= m.cols() {
        jacobi_tall(m)
    } else {
        let (u_t, sigma, v_t) = jacobi_tall(&m.transpose());
        (v_t, sigma, u_t)
    };
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let rank = sigma.iter().filter(|s| **s > RANK_TOL * sigma_max).count();
    let rank = if sigma_max == 0.0 { 0 } else { rank };
    Ok(SvdResult { u, sigma, v, rank })
}

/// Moore-Penrose pseudo-inverse `M^+ = V Sigma^+ U^T`.
pub fn pinv(m: &DenseMatrix) -> Result<DenseMatrix> {
    let f = svd(m)?;
    let mut out = DenseMatrix::zeros(m.cols(), m.rows());
    for k in 0..f.rank {
        let inv = 1.0 / f.sigma[k];
        for i in 0..m.cols() {
            let vik = f.v.get(i, k) * inv;
            if vik == 0.0 {
                continue;
            }
            for j in 0..m.rows() {
                let v = out.get(i, j) + vik * f.u.get(j, k);
                out.set(i, j, v);
            }
        }
    }
    Ok(out)
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(svd(m)?.sigma.first().copied().unwrap_or(0.0))
}

/// Determinant of a square matrix by LU with partial pivoting. Returns 0
/// exactly when a pivot falls below `LU_SINGULAR_TOL * ||A||_inf`.
pub fn lu_det(a: &DenseMatrix) -> Result<f64> {
    if a.rows() != a.cols() {
        return Err(Error::input("determinant of a non-square matrix"));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(1.0);
    }
    let scale = a.inf_norm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let mut lu = a.clone();
    let mut det = 1.0;
    for k in 0..n {
        let mut piv = k;
        for i in (k + 1)..n {
            if lu.get(i, k).abs() > lu.get(piv, k).abs() {
                piv = i;
            }
        }
        let pval = lu.get(piv, k);
        if pval.abs() < LU_SINGULAR_TOL * scale {
            return Ok(0.0);
        }
        if piv != k {
            for j in 0..n {
                let a = lu.get(k, j);
                let b = lu.get(piv, j);
                lu.set(k, j, b);
                lu.set(piv, j, a);
            }
            det = -det;
        }
        det *= lu.get(k, k);
        for i in (k + 1)..n {
            let factor = lu.get(i, k) / lu.get(k, k);
            lu.set(i, k, factor);
            for j in (k + 1)..n {
                let v = lu.get(i, j) - factor * lu.get(k, j);
                lu.set(i, j, v);
            }
        }
    }
    Ok(det)
}

/// `det(M M^T)`. Gram determinants are non-negative; numerical negatives are
/// clamped to zero.
pub fn gram_det(m: &DenseMatrix) -> f64 {
    if m.rows() == 0 {
        return 1.0; // empty row set: vacuous full rank
    }
    let det = lu_det(&m.gram()).expect("gram matrix is square");
    if det <= 0.0 {
        0.0
    } else {
        det
    }
}

/// Smallest positive singular value (the last one above the rank cutoff).
pub fn sigma_min_positive(m: &DenseMatrix) -> Result<f64> {
    let f = svd(m)?;
    if f.rank == 0 {
        return Err(Error::domain("zero matrix has no positive singular value"));
    }
    Ok(f.sigma[f.rank - 1])
}

/// Solve `A x = b` for square `A`; `None` when the pivoting detects
/// singularity.
pub fn solve_square(a: &DenseMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return None;
    }
    if n == 0 {
        return Some(vec![]);
    }
    let scale = a.inf_norm().max(f64::MIN_POSITIVE);
    let mut lu = a.clone();
    let mut x: Vec<f64> = b.to_vec();
    for k in 0..n {
        let mut piv = k;
        for i in (k + 1)..n {
            if lu.get(i, k).abs() > lu.get(piv, k).abs() {
                piv = i;
            }
        }
        if lu.get(piv, k).abs() < LU_SINGULAR_TOL.max(1e-10) * scale {
            return None;
        }
        if piv != k {
            for j in 0..n {
                let a0 = lu.get(k, j);
                let b0 = lu.get(piv, j);
                lu.set(k, j, b0);
                lu.set(piv, j, a0);
            }
            x.swap(k, piv);
        }
        for i in (k + 1)..n {
            let factor = lu.get(i, k) / lu.get(k, k);
            x[i] -= factor * x[k];
            for j in (k + 1)..n {
                let v = lu.get(i, j) - factor * lu.get(k, j);
                lu.set(i, j, v);
            }
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in (k + 1)..n {
            s -= lu.get(k, j) * x[j];
        }
        x[k] = s / lu.get(k, k);
    }
    Some(x)
}

/// Inverse of a square matrix; `None` when singular.
pub fn inverse(a: &DenseMatrix) -> Option<DenseMatrix> {
    let n = a.rows();
    if a.cols() != n {
        return None;
    }
    let mut out = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = solve_square(a, &e)?;
        for (i, v) in col.iter().enumerate() {
            out.set(i, j, *v);
        }
    }
    Some(out)
}

//! Sparse storage, products with `A` and `Aᵀ`, operator-norm estimation and
//! the metric in which the PDHG operator is firmly nonexpansive.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
///
/// Entries inside a row are sorted by column and duplicates are summed at
/// construction, so the summation order of every product is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix { n_rows, n_cols, row_ptr: vec![0; n_rows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &triplets).expect("identity is well formed")
    }

    /// Builds a matrix from `(row, col, value)` triplets. Repeated positions
    /// are summed; explicit zeros are dropped.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        for &(row, col, value) in triplets {
            if row >= n_rows || col >= n_cols {
                return Err(Error::IndexOutOfRange { row, col, n_rows, n_cols });
            }
            if !value.is_finite() {
                return Err(Error::NonFiniteEntry { row, col });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        // stable: duplicates keep input order, so their sum is reproducible
        sorted.sort_by_key(|t| (t.0, t.1));

        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut rows = Vec::with_capacity(sorted.len());
        let mut i = 0;
        while i < sorted.len() {
            let (row, col, mut sum) = sorted[i];
            let mut j = i + 1;
            while j < sorted.len() && sorted[j].0 == row && sorted[j].1 == col {
                sum += sorted[j].2;
                j += 1;
            }
            if sum != 0.0 {
                rows.push(row);
                col_idx.push(col);
                values.push(sum);
            }
            i = j;
        }
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(SparseMatrix { n_rows, n_cols, row_ptr, col_idx, values })
    }

    /// Row-major dense input, mostly for tests and tiny fixtures.
    pub fn from_dense(rows: &[&[f64]]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch { expected: n_cols, got: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n_rows, n_cols, &triplets)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// Iterates `(col, value)` over the stored entries of `row`.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    /// All stored entries in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows {
            out.extend(self.row(r).map(|(c, v)| (r, c, v)));
        }
        out
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.row(row).find(|&(c, _)| c == col).map_or(0.0, |(_, v)| v)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let t: Vec<_> = self.triplets().into_iter().map(|(r, c, v)| (c, r, v)).collect();
        SparseMatrix::from_triplets(self.n_cols, self.n_rows, &t).expect("transpose of a valid matrix")
    }

    /// Copy keeping only the listed columns (others become zero columns).
    pub fn restrict_columns(&self, keep: &[bool]) -> SparseMatrix {
        let t: Vec<_> = self.triplets().into_iter().filter(|&(_, c, _)| keep[c]).collect();
        SparseMatrix::from_triplets(self.n_rows, self.n_cols, &t).expect("subset of a valid matrix")
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, c, v) in self.triplets() {
            d[r][c] = v;
        }
        d
    }

    /// Largest Euclidean norm of a row or a column.
    pub fn max_line_norm(&self) -> f64 {
        let mut cols = vec![0.0; self.n_cols];
        let mut best: f64 = 0.0;
        for i in 0..self.n_rows() {
            let mut r = 0.0;
            for (j, v) in self.row(i) {
                r += v * v;
                cols[j] += v * v;
            }
            best = best.max(r);
        }
        libm::sqrt(cols.iter().copied().fold(best, f64::max))
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `out = A x`.
    pub fn spmv_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch { expected: self.n_cols, got: x.len() });
        }
        if out.len() != self.n_rows {
            return Err(Error::DimensionMismatch { expected: self.n_rows, got: out.len() });
        }
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *o = acc;
        }
        Ok(())
    }

    /// `out = Aᵀ y`.
    pub fn spmv_t_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        if y.len() != self.n_rows {
            return Err(Error::DimensionMismatch { expected: self.n_rows, got: y.len() });
        }
        if out.len() != self.n_cols {
            return Err(Error::DimensionMismatch { expected: self.n_cols, got: out.len() });
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for (r, &yr) in y.iter().enumerate() {
            if yr == 0.0 {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[self.col_idx[k]] += self.values[k] * yr;
            }
        }
        Ok(())
    }
}

pub fn spmv(a: &SparseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; a.n_rows()];
    a.spmv_into(x, &mut out)?;
    Ok(out)
}

pub fn spmv_t(a: &SparseMatrix, y: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; a.n_cols()];
    a.spmv_t_into(y, &mut out)?;
    Ok(out)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Result of [`opnorm_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the matrix has no nonzero entries; `value` is then 0 and no
    /// step sizes can be derived from it.
    pub is_zero: bool,
}

pub const OPNORM_TOL: f64 = 1e-6;
pub const OPNORM_MAX_ITERS: usize = 500;

/// Largest singular value of `A` by power iteration on `AᵀA`.
///
/// Starts from the normalized all-ones vector. If that start is (numerically)
/// orthogonal to the dominant subspace, restarts once from a fixed
/// pseudo-random vector so the estimate stays deterministic.
pub fn opnorm_estimate(a: &SparseMatrix, tol: f64, max_iters: usize) -> NormEstimate {
    if a.is_zero() {
        return NormEstimate { value: 0.0, iterations: 0, converged: true, is_zero: true };
    }
    let n = a.n_cols();
    let ones = vec![1.0 / libm::sqrt(n as f64); n];
    let first = power_iterate(a, ones, tol, max_iters);
    // structured matrices can make the constant vector orthogonal to the top
    // singular direction, so a scrambled mixed-sign start is always tried too
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut start = Vec::with_capacity(n);
    for _ in 0..n {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        start.push((state >> 11) as f64 / (1u64 << 52) as f64 - 1.0 + 0.1);
    }
    let nrm = norm2(&start);
    start.iter_mut().for_each(|v| *v /= nrm);
    let second = power_iterate(a, start, tol, max_iters);
    let mut best = if second.value > first.value { second } else { first };
    best.iterations = first.iterations + second.iterations;
    // the largest row or column norm is a lower bound; below it both starts
    // failed and the Frobenius norm is the safe answer
    if best.value < a.max_line_norm() * (1.0 - tol) {
        best.value = a.frobenius_norm();
        best.converged = false;
    }
    best
}

fn power_iterate(a: &SparseMatrix, mut v: Vec<f64>, tol: f64, max_iters: usize) -> NormEstimate {
    let mut av = vec![0.0; a.n_rows()];
    let mut atav = vec![0.0; a.n_cols()];
    let mut sigma = 0.0;
    for it in 1..=max_iters {
        a.spmv_into(&v, &mut av).expect("dimensions fixed");
        let s = norm2(&av);
        a.spmv_t_into(&av, &mut atav).expect("dimensions fixed");
        let nrm = norm2(&atav);
        if nrm == 0.0 {
            return NormEstimate { value: s, iterations: it, converged: true, is_zero: false };
        }
        for (vi, wi) in v.iter_mut().zip(&atav) {
            *vi = wi / nrm;
        }
        // the per-step change understates the remaining error when the top
        // singular values are close, hence the extra factor
        if it > 1 && (s - sigma).abs() <= 1e-2 * tol * s {
            return NormEstimate { value: s, iterations: it, converged: true, is_zero: false };
        }
        sigma = s;
    }
    NormEstimate { value: sigma, iterations: max_iters, converged: false, is_zero: false }
}

/// Primal step `eta` and dual step `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSizes {
    pub eta: f64,
    pub tau: f64,
}

pub const DEFAULT_STEP_FACTOR: f64 = 0.9;

impl StepSizes {
    pub fn new(eta: f64, tau: f64) -> Result<Self> {
        if !(eta > 0.0 && tau > 0.0 && eta.is_finite() && tau.is_finite()) {
            return Err(Error::InvalidStepSizes { eta, tau });
        }
        Ok(StepSizes { eta, tau })
    }

    /// `eta = tau = theta / sigma`, so `eta * tau * sigma^2 = theta^2`.
    pub fn from_norm(norm: &NormEstimate, theta: f64) -> Result<Self> {
        if norm.is_zero || norm.value <= 0.0 {
            return Err(Error::ZeroMatrix);
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidConfig("step factor must lie in (0, 1)"));
        }
        Self::new(theta / norm.value, theta / norm.value)
    }

    /// Default steps for `a`: norm estimate with the standard tolerance and
    /// a step factor of 0.9.
    pub fn for_matrix(a: &SparseMatrix, theta: f64) -> Result<Self> {
        Self::from_norm(&opnorm_estimate(a, OPNORM_TOL, OPNORM_MAX_ITERS), theta)
    }

    pub fn product(&self, sigma: f64) -> f64 {
        self.eta * self.tau * sigma * sigma
    }

    /// Rejects steps with `eta * tau * sigma^2 >= 1`.
    pub fn check(&self, sigma: f64) -> Result<()> {
        let product = self.product(sigma);
        if product >= 1.0 {
            return Err(Error::StepSizesTooLarge { product });
        }
        Ok(())
    }
}

/// The norm `‖z‖_M` with `M = [[I/eta, -Aᵀ], [-A, I/tau]]`.
#[derive(Debug, Clone)]
pub struct MNorm<'a> {
    a: &'a SparseMatrix,
    steps: StepSizes,
}

impl<'a> MNorm<'a> {
    /// Validates positive definiteness through the norm estimate of `a`.
    pub fn new(a: &'a SparseMatrix, steps: StepSizes) -> Result<Self> {
        let est = opnorm_estimate(a, OPNORM_TOL, OPNORM_MAX_ITERS);
        // the estimate approaches sigma_max from below; pad by the tolerance
        steps.check(est.value * (1.0 + 10.0 * OPNORM_TOL))?;
        Ok(MNorm { a, steps })
    }

    pub fn steps(&self) -> StepSizes {
        self.steps
    }

    pub fn n(&self) -> usize {
        self.a.n_cols()
    }

    pub fn m(&self) -> usize {
        self.a.n_rows()
    }

    pub fn norm_sq_parts(&self, x: &[f64], y: &[f64]) -> f64 {
        let ax = spmv(self.a, x).expect("primal dimension");
        let q = dot(x, x) / self.steps.eta - 2.0 * dot(y, &ax) + dot(y, y) / self.steps.tau;
        q.max(0.0)
    }

    pub fn norm_parts(&self, x: &[f64], y: &[f64]) -> f64 {
        libm::sqrt(self.norm_sq_parts(x, y))
    }

    /// Norm of a stacked vector `z = (x, y)`.
    pub fn norm(&self, z: &[f64]) -> f64 {
        let n = self.n();
        self.norm_parts(&z[..n], &z[n..])
    }

    pub fn norm_sq(&self, z: &[f64]) -> f64 {
        let n = self.n();
        self.norm_sq_parts(&z[..n], &z[n..])
    }
}

/// `‖z‖_M` for a stacked `z = (x, y)`; fails if `M` is not positive definite.
pub fn m_norm(z: &[f64], a: &SparseMatrix, steps: StepSizes) -> Result<f64> {
    if z.len() != a.n_cols() + a.n_rows() {
        return Err(Error::DimensionMismatch { expected: a.n_cols() + a.n_rows(), got: z.len() });
    }
    Ok(MNorm::new(a, steps)?.norm(z))
}

//! Compressed-row sparse matrices and a deterministic conjugate-gradient
//! solver.

use std::io::Write;

use crate::{Error, Result};

/// Square sparse matrix in compressed-row storage with strictly increasing
/// column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    /// Builds a matrix from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)], symmetric: bool) -> Self {
        let mut entries: Vec<(usize, usize, f64)> = triplets.to_vec();
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_offsets = vec![0usize; n + 1];
        let mut col_indices: Vec<usize> = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            debug_assert!(r < n && c < n);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_offsets[r + 1] += row_offsets[r];
        }
        SparseMatrix {
            n,
            row_offsets,
            col_indices,
            values,
            symmetric,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    /// Entry `(i, j)`, zero when outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        match self.col_indices[lo..hi].binary_search(&j) {
            Ok(pos) => self.values[lo + pos],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *out = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// True when `self` and `other` share dimension and sparsity pattern.
    pub fn same_pattern(&self, other: &SparseMatrix) -> bool {
        self.n == other.n
            && self.row_offsets == other.row_offsets
            && self.col_indices == other.col_indices
    }

    /// Linear combination of matrices with identical patterns.
    pub fn combine(terms: &[(f64, &SparseMatrix)]) -> Result<SparseMatrix> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty combination".into()))?;
        for (_, m) in terms.iter().skip(1) {
            if !first.same_pattern(m) {
                return Err(Error::InvalidArgument(
                    "matrices in a combination must share a sparsity pattern".into(),
                ));
            }
        }
        let mut out = (*first).clone();
        out.symmetric = terms.iter().all(|(_, m)| m.symmetric);
        for v in out.values.iter_mut() {
            *v = 0.0;
        }
        for (c, m) in terms {
            for (o, v) in out.values.iter_mut().zip(m.values.iter()) {
                *o += c * v;
            }
        }
        Ok(out)
    }

    /// Largest relative asymmetry `|a_ij - a_ji| / max(1, |a_ij|)`.
    pub fn max_relative_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[k];
                let a = self.values[k];
                let b = self.get(j, i);
                worst = worst.max((a - b).abs() / a.abs().max(1.0));
            }
        }
        worst
    }

    /// Coordinate-format text dump (`i j value` per line) for debugging.
    pub fn write_coordinate<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                writeln!(out, "{} {} {}", i, self.col_indices[k], self.values[k])?;
            }
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Conjugate gradients for symmetric positive definite systems.
///
/// Returns `x` with `||Ax - b|| <= tol * ||b||` (verified on the true
/// residual, not just the recurrence). Iteration order is fixed, so the
/// result is deterministic for identical inputs.
pub fn cg_solve(a: &SparseMatrix, b: &[f64], tol: f64, maxit: usize) -> Result<Vec<f64>> {
    cg_solve_guess(a, b, None, tol, maxit).map(|(x, _)| x)
}

/// [`cg_solve`] with an initial guess; also reports the iteration count.
pub fn cg_solve_guess(
    a: &SparseMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, usize)> {
    if !a.symmetric() {
        return Err(Error::NotSymmetric);
    }
    if b.len() != a.n() {
        return Err(Error::InvalidArgument(
            "right-hand side length mismatch".into(),
        ));
    }
    let n = a.n();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let threshold = tol * b_norm;

    let mut x = match x0 {
        Some(guess) => {
            if guess.len() != n {
                return Err(Error::InvalidArgument(
                    "initial guess length mismatch".into(),
                ));
            }
            guess.to_vec()
        }
        None => vec![0.0; n],
    };
    let mut r = b.to_vec();
    let mut ax = vec![0.0; n];
    a.matvec(&x, &mut ax);
    for i in 0..n {
        r[i] -= ax[i];
    }
    let mut rr = dot(&r, &r);
    if rr.sqrt() <= threshold {
        return Ok((x, 0));
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    while iterations < maxit {
        iterations += 1;
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::NotPositiveDefinite {
                iteration: iterations,
                curvature: pap,
            });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= threshold {
            // accept only if the true residual agrees; otherwise restart from it
            a.matvec(&x, &mut ax);
            let mut true_r = b.to_vec();
            for i in 0..n {
                true_r[i] -= ax[i];
            }
            if norm(&true_r) <= threshold {
                return Ok((x, iterations));
            }
            r = true_r;
            rr = dot(&r, &r);
            p.copy_from_slice(&r);
            continue;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    a.matvec(&x, &mut ax);
    let mut true_r = b.to_vec();
    for i in 0..n {
        true_r[i] -= ax[i];
    }
    Err(Error::CgDidNotConverge {
        iterations,
        residual: norm(&true_r) / b_norm,
    })
}

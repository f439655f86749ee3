//! BDF2 convolution coefficients and the discrete orthogonal / complementary
//! convolution (DOC/DCC) kernel tables.
//!
//! On a variable grid the two-step backward differentiation operator is the
//! convolution `D2 u^n = sum_{k<=n} b^{(n)}_{n-k} (u^k - u^{k-1})` with only
//! two nonzero weights per level. The DOC kernels `theta^{(n)}_{n-j}` invert
//! that convolution level by level (their action on `D2 u` telescopes to
//! `u^n - u^{n-1}`), and the DCC kernels `p^{(n)}_{n-j}` are their running
//! column sums (telescoping to `u^n - u^0`). Both tables are lower
//! triangular and are used here as diagnostics: the time stepper itself only
//! consumes the `b` coefficients.

use crate::timegrid::TimeGrid;
use crate::{Error, Result};

/// Largest admissible adjacent step ratio: the real root of
/// `x^3 = (1 + 2x)^2`, approximately `4.8645`.
pub fn rmax() -> f64 {
    let s = 177.0_f64.sqrt();
    ((1196.0 - 12.0 * s).cbrt() + (1196.0 + 12.0 * s).cbrt()) / 6.0 + 4.0 / 3.0
}

/// Per-level BDF coefficients `b0[n] = b^{(n)}_0` and `b1[n] = b^{(n)}_1`.
///
/// Level 1 is the one-step backward difference (`b0[1] = 1/tau_1`,
/// `b1[1] = 0`); for `n >= 2` the weights depend on the adjacent ratio `r_n`.
/// Weights `b^{(n)}_j` for `j >= 2` are identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Bdf2Coefficients {
    b0: Vec<f64>,
    b1: Vec<f64>,
}

impl Bdf2Coefficients {
    /// Number of levels `N`.
    pub fn num_levels(&self) -> usize {
        self.b0.len()
    }

    /// `b^{(n)}_0`, `n = 1..=N`.
    pub fn b0(&self, n: usize) -> f64 {
        self.b0[n - 1]
    }

    /// `b^{(n)}_1`, `n = 1..=N` (zero at `n = 1`).
    pub fn b1(&self, n: usize) -> f64 {
        self.b1[n - 1]
    }

    /// General accessor `b^{(n)}_j`; zero for `j >= 2`.
    pub fn b(&self, n: usize, j: usize) -> f64 {
        match j {
            0 => self.b0(n),
            1 => self.b1(n),
            _ => 0.0,
        }
    }
}

/// Computes the BDF1/BDF2 convolution weights of `grid`.
pub fn bdf2_coefficients(grid: &TimeGrid) -> Bdf2Coefficients {
    let n = grid.num_steps();
    let mut b0 = Vec::with_capacity(n);
    let mut b1 = Vec::with_capacity(n);
    b0.push(1.0 / grid.tau(1));
    b1.push(0.0);
    for k in 2..=n {
        let r = grid.ratio(k);
        let tau = grid.tau(k);
        b0.push((1.0 + 2.0 * r) / (tau * (1.0 + r)));
        b1.push(-(r * r) / (tau * (1.0 + r)));
    }
    Bdf2Coefficients { b0, b1 }
}

/// Applies the discrete time-derivative operator to a scalar history
/// `u[0..=N]`, returning `d[n] = D2 u^n` for `n = 1..=N`.
pub fn apply_d2(coeffs: &Bdf2Coefficients, values: &[f64]) -> Result<Vec<f64>> {
    let n = coeffs.num_levels();
    if values.len() != n + 1 {
        return Err(Error::InvalidArgument(format!(
            "expected {} values, got {}",
            n + 1,
            values.len()
        )));
    }
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        let mut d = coeffs.b0(k) * (values[k] - values[k - 1]);
        if k >= 2 {
            d += coeffs.b1(k) * (values[k - 1] - values[k - 2]);
        }
        out.push(d);
    }
    Ok(out)
}

/// Vector-valued variant of [`apply_d2`]; all entries must share one length.
pub fn apply_d2_vectors(coeffs: &Bdf2Coefficients, values: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = coeffs.num_levels();
    if values.len() != n + 1 {
        return Err(Error::InvalidArgument(format!(
            "expected {} vectors, got {}",
            n + 1,
            values.len()
        )));
    }
    let len = values[0].len();
    if values.iter().any(|v| v.len() != len) {
        return Err(Error::InvalidArgument(
            "vector entries must share one length".into(),
        ));
    }
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        let mut d = vec![0.0; len];
        for i in 0..len {
            d[i] = coeffs.b0(k) * (values[k][i] - values[k - 1][i]);
            if k >= 2 {
                d[i] += coeffs.b1(k) * (values[k - 1][i] - values[k - 2][i]);
            }
        }
        out.push(d);
    }
    Ok(out)
}

/// Lower-triangular table of DOC kernels; `row(n)[j-1] = theta^{(n)}_{n-j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DocKernels {
    rows: Vec<Vec<f64>>,
}

impl DocKernels {
    pub fn num_levels(&self) -> usize {
        self.rows.len()
    }

    /// `theta^{(n)}_{n-j}` for `1 <= j <= n`.
    pub fn theta(&self, n: usize, j: usize) -> f64 {
        self.rows[n - 1][j - 1]
    }

    /// Row `n` ordered by increasing `j`.
    pub fn row(&self, n: usize) -> &[f64] {
        &self.rows[n - 1]
    }

    /// `sum_j theta^{(n)}_{n-j}`; equals `tau_n` when every ratio is admissible.
    pub fn row_sum(&self, n: usize) -> f64 {
        self.rows[n - 1].iter().sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter().cloned())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Computes the DOC kernels by forward substitution on the defining
/// lower-triangular system `sum_{j=k..n} theta^{(n)}_{n-j} b^{(j)}_{j-k} = delta_{nk}`.
///
/// Because `b^{(j)}_i = 0` for `i >= 2`, each row reduces to the two-term
/// recursion `theta^{(n)}_0 = 1/b0[n]`,
/// `theta^{(n)}_{n-k} = -theta^{(n)}_{n-k-1} * b1[k+1] / b0[k]`.
pub fn doc_kernels(coeffs: &Bdf2Coefficients) -> DocKernels {
    let n_levels = coeffs.num_levels();
    let mut rows = Vec::with_capacity(n_levels);
    for n in 1..=n_levels {
        let mut row = vec![0.0; n];
        row[n - 1] = 1.0 / coeffs.b0(n);
        for k in (1..n).rev() {
            row[k - 1] = -row[k] * coeffs.b1(k + 1) / coeffs.b0(k);
        }
        rows.push(row);
    }
    DocKernels { rows }
}

/// Lower-triangular table of DCC kernels; `row(n)[j-1] = p^{(n)}_{n-j}`.
///
/// By convention `p^{(n)}_{-1} = 0`, which makes the difference relation
/// `theta^{(n)}_{n-j} = p^{(n)}_{n-j} - p^{(n-1)}_{n-1-j}` hold for `j = n` too.
#[derive(Debug, Clone, PartialEq)]
pub struct DccKernels {
    rows: Vec<Vec<f64>>,
}

impl DccKernels {
    pub fn num_levels(&self) -> usize {
        self.rows.len()
    }

    /// `p^{(n)}_{n-j}` for `1 <= j <= n`.
    pub fn p(&self, n: usize, j: usize) -> f64 {
        self.rows[n - 1][j - 1]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.rows[n - 1]
    }

    /// `sum_j p^{(n)}_{n-j}`; equals `t_n` when every ratio is admissible.
    pub fn row_sum(&self, n: usize) -> f64 {
        self.rows[n - 1].iter().sum()
    }

    pub fn max_entry(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter().cloned())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Accumulates the DCC kernels `p^{(n)}_{n-j} = sum_{l=j..n} theta^{(l)}_{l-j}`
/// as running column sums of the DOC table.
pub fn dcc_kernels(doc: &DocKernels) -> DccKernels {
    let n_levels = doc.num_levels();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_levels);
    for n in 1..=n_levels {
        let mut row = vec![0.0; n];
        for j in 1..=n {
            let prev = if j < n { rows[n - 2][j - 1] } else { 0.0 };
            row[j - 1] = prev + doc.theta(n, j);
        }
        rows.push(row);
    }
    DccKernels { rows }
}

/// The quadratic form `2 sum_{k<=n} w_k sum_{j<=k} b^{(k)}_{k-j} w_j`.
///
/// Under the admissible-ratio condition with margin `delta` this is bounded
/// below by `(delta/20) sum_k w_k^2 / tau_k`.
pub fn quadratic_form_b(coeffs: &Bdf2Coefficients, w: &[f64]) -> f64 {
    assert!(
        w.len() <= coeffs.num_levels(),
        "sequence longer than coefficient table"
    );
    let mut acc = 0.0;
    for k in 1..=w.len() {
        let mut inner = coeffs.b0(k) * w[k - 1];
        if k >= 2 {
            inner += coeffs.b1(k) * w[k - 2];
        }
        acc += w[k - 1] * inner;
    }
    2.0 * acc
}

/// The quadratic form `sum_{k<=n} w_k sum_{j<=k} theta^{(k)}_{k-j} w_j`;
/// nonnegative under the admissible-ratio condition.
pub fn quadratic_form_theta(doc: &DocKernels, w: &[f64]) -> f64 {
    assert!(
        w.len() <= doc.num_levels(),
        "sequence longer than kernel table"
    );
    let mut acc = 0.0;
    for k in 1..=w.len() {
        let row = doc.row(k);
        let mut inner = 0.0;
        for j in 1..=k {
            inner += row[j - 1] * w[j - 1];
        }
        acc += w[k - 1] * inner;
    }
    acc
}

/// Residuals `R[n] = (D2 u)[n] - u'(t_n)` of the discrete derivative against
/// the exact derivative of a smooth scalar function of time.
pub fn d2_truncation_residual<F, G>(grid: &TimeGrid, u: F, du: G) -> Vec<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let coeffs = bdf2_coefficients(grid);
    let samples: Vec<f64> = (0..=grid.num_steps()).map(|k| u(grid.time(k))).collect();
    let d = apply_d2(&coeffs, &samples).expect("sample length matches grid");
    d.iter()
        .enumerate()
        .map(|(i, &dn)| dn - du(grid.time(i + 1)))
        .collect()
}

//! Dense matrix kernels: sign-normalised thin QR, dense SVD and a few
//! block helpers.
//!
//! Matrices are `nalgebra::DMatrix<f64>` (column-major in memory). Anything
//! that serialises a matrix uses row-major order via [`to_row_major`].

use nalgebra::{DMatrix, DVector};

use crate::error::{mismatch, Error, Result};

pub type DenseMatrix = DMatrix<f64>;

/// Builds a matrix from row-major values, rejecting non-finite entries.
pub fn from_row_major(rows: usize, cols: usize, values: &[f64]) -> Result<DenseMatrix> {
    if values.len() != rows * cols {
        return Err(mismatch(
            "from_row_major",
            rows * cols,
            values.len(),
        ));
    }
    ensure_finite(values, "matrix")?;
    Ok(DenseMatrix::from_row_slice(rows, cols, values))
}

pub fn to_row_major(m: &DenseMatrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub(crate) fn ensure_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// `max |QᵀQ − I|` over all entries.
pub fn orthonormality_error(q: &DenseMatrix) -> f64 {
    let g = q.tr_mul(q);
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Householder QR of any shape: `q` is `rows × k`, `r` is `k × cols` with
/// `k = min(rows, cols)`; the diagonal of `r` is made non-negative.
pub(crate) fn householder_qr(m: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    ensure_finite(m.as_slice(), "qr input")?;
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..r.nrows().min(r.ncols()) {
        if r[(i, i)] < 0.0 {
            r.row_mut(i).neg_mut();
            q.column_mut(i).neg_mut();
        }
    }
    Ok((q, r))
}

/// Thin QR factorisation `m = q·r` with orthonormal `q` (`rows × cols`) and
/// upper-triangular `r` carrying a non-negative diagonal.
pub fn thin_qr(m: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    if m.nrows() < m.ncols() {
        return Err(mismatch(
            "thin_qr",
            format!("rows >= {}", m.ncols()),
            format!("{} rows", m.nrows()),
        ));
    }
    householder_qr(m)
}

/// Singular value decomposition `a ≈ u·diag(s)·vᵀ`.
///
/// `s` is sorted non-increasing and every column of `u` has a non-negative
/// first nonzero entry (`v` is flipped alongside).
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DenseMatrix,
    pub s: DVector<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn truncate(mut self, r: usize) -> Self {
        let r = r.min(self.s.len());
        self.u = self.u.columns(0, r).into_owned();
        self.v = self.v.columns(0, r).into_owned();
        self.s = self.s.rows(0, r).into_owned();
        self
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for (j, s) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }

    pub fn s_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_diagonal(&self.s)
    }

    /// Sorts the triplets by descending singular value and applies the sign
    /// convention. Sorting is stable so equal values keep solver order.
    pub(crate) fn normalize(self) -> Self {
        let k = self.s.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| self.s[b].total_cmp(&self.s[a]));
        let mut u = DenseMatrix::zeros(self.u.nrows(), k);
        let mut v = DenseMatrix::zeros(self.v.nrows(), k);
        let mut s = DVector::zeros(k);
        for (dst, &src) in order.iter().enumerate() {
            u.set_column(dst, &self.u.column(src));
            v.set_column(dst, &self.v.column(src));
            s[dst] = self.s[src].max(0.0);
        }
        for j in 0..k {
            if leading_sign(u.column(j).iter()) < 0.0 {
                u.column_mut(j).neg_mut();
                v.column_mut(j).neg_mut();
            }
        }
        Svd { u, s, v }
    }
}

fn leading_sign<'a>(values: impl Iterator<Item = &'a f64>) -> f64 {
    for &x in values {
        if x.abs() > 1e-14 {
            return x.signum();
        }
    }
    1.0
}

/// Full thin SVD of a dense matrix (`k = min(rows, cols)` triplets).
pub fn dense_svd(a: &DenseMatrix) -> Result<Svd> {
    ensure_finite(a.as_slice(), "svd input")?;
    let k = a.nrows().min(a.ncols());
    if k == 0 {
        return Ok(Svd {
            u: DenseMatrix::zeros(a.nrows(), 0),
            s: DVector::zeros(0),
            v: DenseMatrix::zeros(a.ncols(), 0),
        });
    }
    let fa = faer::Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    let svd = fa.thin_svd().map_err(|_| Error::NonFinite("svd did not converge"))?;
    let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
    Ok(Svd {
        u: DenseMatrix::from_fn(fu.nrows(), fu.ncols(), |i, j| fu[(i, j)]),
        s: DVector::from_fn(fs.nrows(), |i, _| fs[i]),
        v: DenseMatrix::from_fn(fv.nrows(), fv.ncols(), |i, j| fv[(i, j)]),
    }
    .normalize())
}

/// `[[a, 0], [0, b]]`
pub fn block_diag(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    a.kronecker(b)
}

/// Appends `extra` zero rows.
pub fn pad_rows(m: &DenseMatrix, extra: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.nrows() + extra, m.ncols());
    out.view_mut((0, 0), m.shape()).copy_from(m);
    out
}

pub fn leading_columns(m: &DenseMatrix, k: usize) -> DenseMatrix {
    m.columns(0, k.min(m.ncols())).into_owned()
}

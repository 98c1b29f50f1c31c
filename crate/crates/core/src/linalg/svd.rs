//! Truncated SVD of dense or sparse operators.
//!
//! Three routes, picked by shape:
//! * both sides ≤ [`DENSE_LIMIT`]: densify and run a full dense SVD;
//! * short side ≤ [`DENSE_LIMIT`]: Gram matrix of the short side, followed by
//!   a Rayleigh–Ritz refinement so singular values carry full precision;
//! * otherwise: seeded randomized range finder with
//!   [`OVERSAMPLING`] extra columns and [`POWER_ITERATIONS`] power steps.

use nalgebra::{DVector, SymmetricEigen};

use super::dense::{dense_svd, householder_qr, DenseMatrix, Svd};
use super::random::{gaussian_matrix_from, rng};
use super::sparse::SparseMatrix;
use crate::error::{mismatch, Error, Result};

pub const DENSE_LIMIT: usize = 500;
pub const OVERSAMPLING: usize = 10;
pub const POWER_ITERATIONS: usize = 2;

/// Minimal operator interface the SVD routes need.
pub trait LinearOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `self · d`
    fn apply(&self, d: &DenseMatrix) -> DenseMatrix;
    /// `selfᵀ · d`
    fn apply_transpose(&self, d: &DenseMatrix) -> DenseMatrix;
    /// `self · selfᵀ`
    fn gram_rows(&self) -> DenseMatrix;
    fn to_dense(&self) -> DenseMatrix;
    fn transposed(&self) -> Box<dyn LinearOperator + '_>;
}

impl LinearOperator for DenseMatrix {
    fn rows(&self) -> usize {
        self.nrows()
    }
    fn cols(&self) -> usize {
        self.ncols()
    }
    fn apply(&self, d: &DenseMatrix) -> DenseMatrix {
        self * d
    }
    fn apply_transpose(&self, d: &DenseMatrix) -> DenseMatrix {
        self.tr_mul(d)
    }
    fn gram_rows(&self) -> DenseMatrix {
        self * self.transpose()
    }
    fn to_dense(&self) -> DenseMatrix {
        self.clone()
    }
    fn transposed(&self) -> Box<dyn LinearOperator + '_> {
        Box::new(self.transpose())
    }
}

impl LinearOperator for SparseMatrix {
    fn rows(&self) -> usize {
        SparseMatrix::rows(self)
    }
    fn cols(&self) -> usize {
        SparseMatrix::cols(self)
    }
    fn apply(&self, d: &DenseMatrix) -> DenseMatrix {
        self.mul_dense(d).expect("operator shapes checked by caller")
    }
    fn apply_transpose(&self, d: &DenseMatrix) -> DenseMatrix {
        self.tr_mul_dense(d).expect("operator shapes checked by caller")
    }
    fn gram_rows(&self) -> DenseMatrix {
        SparseMatrix::gram_rows(self)
    }
    fn to_dense(&self) -> DenseMatrix {
        SparseMatrix::to_dense(self)
    }
    fn transposed(&self) -> Box<dyn LinearOperator + '_> {
        Box::new(self.transpose())
    }
}

/// Rank-`r` truncated SVD. Deterministic for a given `seed`; the seed only
/// matters on the randomized route.
pub fn truncated_svd(a: &dyn LinearOperator, r: usize, seed: u64) -> Result<Svd> {
    let (m, n) = (a.rows(), a.cols());
    if r > m.min(n) {
        return Err(Error::RankTooLarge {
            op: "truncated_svd",
            rank: r,
            max: m.min(n),
        });
    }
    if m <= DENSE_LIMIT && n <= DENSE_LIMIT {
        return Ok(dense_svd(&a.to_dense())?.truncate(r));
    }
    if m.min(n) <= DENSE_LIMIT {
        return gram_svd(a, r);
    }
    randomized_svd(a, r, seed)
}

/// Gram route: eigenvectors of the short-side Gram matrix, then one
/// Rayleigh–Ritz step `A·V = Q·R`, `R = Ur·S·Vrᵀ`.
fn gram_svd(a: &dyn LinearOperator, r: usize) -> Result<Svd> {
    if a.rows() > a.cols() {
        let t = gram_svd(a.transposed().as_ref(), r)?;
        return Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        }
        .normalize());
    }
    // rows are the short side here
    let g = a.gram_rows();
    let basis = leading_eigenvectors(g, r);
    let y = a.apply_transpose(&basis); // n × r, spans the leading right space
    let (q, rr) = householder_qr(&y)?;
    let inner = dense_svd(&rr.transpose())?;
    // A ≈ basis·basisᵀ·A = basis·(Q·R)ᵀ = basis·Rᵀ·Qᵀ
    Ok(Svd {
        u: &basis * inner.u,
        s: inner.s,
        v: q * inner.v,
    }
    .normalize())
}

fn leading_eigenvectors(g: DenseMatrix, r: usize) -> DenseMatrix {
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut out = DenseMatrix::zeros(eig.eigenvectors.nrows(), r);
    for (dst, &src) in order.iter().take(r).enumerate() {
        out.set_column(dst, &eig.eigenvectors.column(src));
    }
    out
}

fn randomized_svd(a: &dyn LinearOperator, r: usize, seed: u64) -> Result<Svd> {
    let (m, n) = (a.rows(), a.cols());
    let p = (r + OVERSAMPLING).min(m.min(n));
    let mut g = rng(seed);
    let omega = gaussian_matrix_from(n, p, 1.0, &mut g);
    let mut q = householder_qr(&a.apply(&omega))?.0;
    for _ in 0..POWER_ITERATIONS {
        let z = householder_qr(&a.apply_transpose(&q))?.0;
        q = householder_qr(&a.apply(&z))?.0;
    }
    // B = Qᵀ A, handled through its transpose (n × p, tall)
    let bt = a.apply_transpose(&q);
    let inner = dense_svd(&bt)?;
    Ok(Svd {
        u: q * inner.v,
        s: inner.s,
        v: inner.u,
    }
    .normalize()
    .truncate(r))
}

/// Leading `r` left singular vectors of a dense matrix (any shape). When
/// `r` exceeds the numerical rank the trailing columns still complete an
/// orthonormal set.
pub fn leading_left_vectors(y: &DenseMatrix, r: usize) -> Result<DenseMatrix> {
    if r > y.nrows() {
        return Err(Error::RankTooLarge {
            op: "leading_left_vectors",
            rank: r,
            max: y.nrows(),
        });
    }
    if r <= y.ncols() {
        let svd = dense_svd(y)?;
        return Ok(svd.u.columns(0, r).into_owned());
    }
    // More vectors requested than columns: keep the column space, then
    // complete it with an orthonormal basis of the rest.
    let svd = dense_svd(y)?;
    complete_basis(&svd.u, r)
}

/// Extends orthonormal columns `q` to `r` orthonormal columns.
pub(crate) fn complete_basis(q: &DenseMatrix, r: usize) -> Result<DenseMatrix> {
    let n = q.nrows();
    if r > n {
        return Err(mismatch("complete_basis", format!("<= {n} columns"), r));
    }
    let mut stacked = DenseMatrix::zeros(n, q.ncols() + n);
    stacked.view_mut((0, 0), q.shape()).copy_from(q);
    stacked
        .view_mut((0, q.ncols()), (n, n))
        .copy_from(&DenseMatrix::identity(n, n));
    let (full, _) = householder_qr(&stacked)?;
    let mut out = full.columns(0, r).into_owned();
    // keep the original columns bit-for-bit where they are already orthonormal
    out.view_mut((0, 0), q.shape()).copy_from(q);
    Ok(out)
}

pub fn singular_values(a: &DenseMatrix) -> Result<DVector<f64>> {
    Ok(dense_svd(a)?.s)
}

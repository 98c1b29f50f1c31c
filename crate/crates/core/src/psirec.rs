//! Low-rank matrix recommender updated with the projector-splitting
//! integrator.
//!
//! The state is a rank-`r` factorisation `U·S·Vᵀ` of the binary user–item
//! matrix. `S` is kept dense because integrator steps do not preserve a
//! diagonal middle factor.

use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};
use crate::ids::{EntityId, IdMap};
use crate::linalg::dense::householder_qr;
use crate::linalg::random::gaussian_matrix;
use crate::linalg::{
    block_diag, dense_svd, orthonormality_error, pad_rows, truncated_svd, DenseMatrix,
    SparseMatrix,
};
use crate::ranking::top_n;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Users,
    Items,
}

/// How rows for unseen entities are initialised before their data arrives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttachStrategy {
    Zero,
    Gaussian { sigma: f64 },
}

impl AttachStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AttachStrategy::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => Err(
                Error::InvalidParameter(format!("gaussian sigma must be finite and >= 0, got {sigma}")),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvdState {
    pub u: DenseMatrix,
    pub s: DenseMatrix,
    pub v: DenseMatrix,
    pub user_map: IdMap,
    pub item_map: IdMap,
    pub rank: usize,
}

fn identity_map(n: usize) -> IdMap {
    (0..n as EntityId).collect()
}

fn check_new(map: &IdMap, ids: &[EntityId], kind: &'static str) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for &id in ids {
        if map.contains(id) || !seen.insert(id) {
            return Err(Error::KnownEntity { kind, id });
        }
    }
    Ok(())
}

impl SvdState {
    /// Truncated rank-`r` SVD of `x`. Rows and columns get ids `0..n`;
    /// use [`SvdState::with_maps`] to attach real ids.
    pub fn init(x: &SparseMatrix, r: usize, seed: u64) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidParameter("rank must be >= 1".into()));
        }
        let svd = truncated_svd(x, r, seed)?;
        Ok(Self {
            s: svd.s_matrix(),
            u: svd.u,
            v: svd.v,
            user_map: identity_map(x.rows()),
            item_map: identity_map(x.cols()),
            rank: r,
        })
    }

    pub fn with_maps(mut self, users: IdMap, items: IdMap) -> Result<Self> {
        if users.len() != self.u.nrows() || items.len() != self.v.nrows() {
            return Err(mismatch(
                "id maps",
                format!("{} users, {} items", self.u.nrows(), self.v.nrows()),
                format!("{} users, {} items", users.len(), items.len()),
            ));
        }
        self.user_map = users;
        self.item_map = items;
        Ok(self)
    }

    pub fn n_users(&self) -> usize {
        self.u.nrows()
    }

    pub fn n_items(&self) -> usize {
        self.v.nrows()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        &self.u * &self.s * self.v.transpose()
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.u).max(orthonormality_error(&self.v))
    }

    /// One projector-splitting step absorbing `delta` (same shape as the
    /// model, known rows and columns only).
    pub fn psi_update(&mut self, delta: &SparseMatrix) -> Result<()> {
        if delta.shape() != [self.n_users(), self.n_items()] {
            return Err(mismatch(
                "psi_update",
                format!("{}×{}", self.n_users(), self.n_items()),
                format!("{}×{}", delta.rows(), delta.cols()),
            ));
        }
        if delta.is_empty() {
            return Ok(());
        }
        let dv = delta.mul_dense(&self.v)?;
        let k = &self.u * &self.s + &dv;
        let (u1, s_hat) = householder_qr(&k)?;
        let s_tilde = s_hat - u1.tr_mul(&dv);
        let l = &self.v * s_tilde.transpose() + delta.tr_mul_dense(&u1)?;
        let (v1, r) = householder_qr(&l)?;
        self.u = u1;
        self.v = v1;
        self.s = r.transpose();
        Ok(())
    }

    /// Appends entities along `axis` with their interactions against every
    /// known counterpart (incremental SVD). For new items `delta` is
    /// `n_users × ids.len()`, for new users `ids.len() × n_items`. The rank
    /// is truncated back to `r` afterwards.
    pub fn add_rows_or_cols(&mut self, delta: &SparseMatrix, axis: Axis, ids: &[EntityId]) -> Result<()> {
        if ids.is_empty() {
            return Ok(());
        }
        let cols = match axis {
            Axis::Items => delta.clone(),
            Axis::Users => delta.transpose(),
        };
        let (basis, other, s, map, kind) = match axis {
            Axis::Items => (&self.u, &self.v, self.s.clone(), &self.item_map, "item"),
            Axis::Users => (&self.v, &self.u, self.s.transpose(), &self.user_map, "user"),
        };
        check_new(map, ids, kind)?;
        if cols.shape() != [basis.nrows(), ids.len()] {
            return Err(mismatch(
                "add_rows_or_cols",
                format!("{}×{}", basis.nrows(), ids.len()),
                format!("{}×{}", cols.rows(), cols.cols()),
            ));
        }
        let (b1, s1, o1) = append_columns(basis, &s, other, &cols.to_dense(), self.rank)?;
        match axis {
            Axis::Items => {
                self.u = b1;
                self.s = s1;
                self.v = o1;
                ids.iter().for_each(|&id| {
                    self.item_map.insert(id);
                });
            }
            Axis::Users => {
                self.v = b1;
                self.s = s1.transpose();
                self.u = o1;
                ids.iter().for_each(|&id| {
                    self.user_map.insert(id);
                });
            }
        }
        Ok(())
    }

    /// Merges a block of entirely new users × entirely new items as a
    /// block-diagonal extension, truncated back to rank `r`.
    pub fn add_block(
        &mut self,
        delta: &SparseMatrix,
        new_users: &[EntityId],
        new_items: &[EntityId],
        seed: u64,
    ) -> Result<()> {
        check_new(&self.user_map, new_users, "user")?;
        check_new(&self.item_map, new_items, "item")?;
        if delta.shape() != [new_users.len(), new_items.len()] {
            return Err(mismatch(
                "add_block",
                format!("{}×{}", new_users.len(), new_items.len()),
                format!("{}×{}", delta.rows(), delta.cols()),
            ));
        }
        if delta.is_empty() {
            if !new_users.is_empty() || !new_items.is_empty() {
                self.u = pad_rows(&self.u, new_users.len());
                self.v = pad_rows(&self.v, new_items.len());
                self.extend_maps(new_users, new_items);
            }
            return Ok(());
        }
        let k = self.rank.min(delta.rows()).min(delta.cols());
        let small = truncated_svd(delta, k, seed)?;
        let middle = block_diag(&self.s, &small.s_matrix());
        let mix = dense_svd(&middle)?.truncate(self.rank);
        self.u = block_diag(&self.u, &small.u) * &mix.u;
        self.v = block_diag(&self.v, &small.v) * &mix.v;
        self.s = mix.s_matrix();
        self.extend_maps(new_users, new_items);
        Ok(())
    }

    fn extend_maps(&mut self, users: &[EntityId], items: &[EntityId]) {
        for &id in users {
            self.user_map.insert(id);
        }
        for &id in items {
            self.item_map.insert(id);
        }
    }

    /// Adds placeholder rows for unseen entities. Zero rows keep the factor
    /// orthonormal as is; gaussian rows are re-orthonormalised by QR with
    /// the triangular factor folded into `S`.
    pub fn attach_embeddings(
        &mut self,
        ids: &[EntityId],
        axis: Axis,
        strategy: AttachStrategy,
        seed: u64,
    ) -> Result<()> {
        strategy.validate()?;
        if ids.is_empty() {
            return Ok(());
        }
        let kind = if axis == Axis::Users { "user" } else { "item" };
        let map = if axis == Axis::Users { &self.user_map } else { &self.item_map };
        check_new(map, ids, kind)?;
        let factor = if axis == Axis::Users { &self.u } else { &self.v };
        let (q, r) = attach_rows(factor, ids.len(), strategy, seed)?;
        match axis {
            Axis::Users => {
                self.u = q;
                if let Some(r) = r {
                    self.s = r * &self.s;
                }
                ids.iter().for_each(|&id| {
                    self.user_map.insert(id);
                });
            }
            Axis::Items => {
                self.v = q;
                if let Some(r) = r {
                    self.s = &self.s * r.transpose();
                }
                ids.iter().for_each(|&id| {
                    self.item_map.insert(id);
                });
            }
        }
        Ok(())
    }

    /// Re-diagonalises `S` by an SVD of the `r × r` middle factor.
    pub fn rediagonalize(&mut self) -> Result<()> {
        let svd = dense_svd(&self.s)?;
        self.u = &self.u * &svd.u;
        self.v = &self.v * &svd.v;
        self.s = svd.s_matrix();
        Ok(())
    }

    /// Relevance of every item for a user whose consumed item rows are
    /// `prefs`: `V·(Vᵀ·p)`.
    pub fn scores(&self, prefs: &[usize]) -> Vec<f64> {
        let mut proj = nalgebra::DVector::zeros(self.rank);
        for &i in prefs {
            if i < self.n_items() {
                proj += self.v.row(i).transpose();
            }
        }
        (&self.v * proj).iter().copied().collect()
    }

    /// Top-`n` item rows for a user profile.
    pub fn recommend(&self, prefs: &[usize], n: usize, exclude_seen: bool) -> Vec<usize> {
        let scores = self.scores(prefs);
        top_n(&scores, n, if exclude_seen { prefs } else { &[] })
    }
}

/// Rows appended to an orthonormal factor. Returns the new factor and, for
/// the gaussian strategy, the `R` from its QR re-orthonormalisation.
pub(crate) fn attach_rows(
    factor: &DenseMatrix,
    count: usize,
    strategy: AttachStrategy,
    seed: u64,
) -> Result<(DenseMatrix, Option<DenseMatrix>)> {
    let mut grown = pad_rows(factor, count);
    match strategy {
        AttachStrategy::Zero => Ok((grown, None)),
        AttachStrategy::Gaussian { sigma } => {
            let noise = gaussian_matrix(count, factor.ncols(), sigma, seed);
            grown
                .view_mut((factor.nrows(), 0), noise.shape())
                .copy_from(&noise);
            let (q, r) = householder_qr(&grown)?;
            Ok((q, Some(r)))
        }
    }
}

/// Incremental SVD for new columns: given `X = basis·s·otherᵀ` and new
/// columns `c`, returns a rank-`r` factorisation of `[X | c]`.
///
/// The enlarged basis comes from one Householder QR of `[basis | c]`, which
/// also supplies the residual directions and their triangular factor.
pub(crate) fn append_columns(
    basis: &DenseMatrix,
    s: &DenseMatrix,
    other: &DenseMatrix,
    c: &DenseMatrix,
    r: usize,
) -> Result<(DenseMatrix, DenseMatrix, DenseMatrix)> {
    let k0 = basis.ncols();
    let n_new = c.ncols();
    let mut stacked = DenseMatrix::zeros(basis.nrows(), k0 + n_new);
    stacked.view_mut((0, 0), basis.shape()).copy_from(basis);
    stacked.view_mut((0, k0), c.shape()).copy_from(c);
    let (q, rr) = householder_qr(&stacked)?;
    // [basis | c] = q·rr, so [basis·s | c] = q·[rr₁·s | rr₂]
    let rr1 = rr.columns(0, k0);
    let rr2 = rr.columns(k0, n_new);
    let mut middle = DenseMatrix::zeros(rr.nrows(), s.ncols() + n_new);
    middle
        .view_mut((0, 0), (rr.nrows(), s.ncols()))
        .copy_from(&(rr1 * s));
    middle.view_mut((0, s.ncols()), rr2.shape()).copy_from(&rr2);
    let svd = dense_svd(&middle)?.truncate(r);
    let b1 = q * &svd.u;
    let o1 = block_diag(other, &DenseMatrix::identity(n_new, n_new)) * &svd.v;
    Ok((b1, svd.s_matrix(), o1))
}

//! Sequential recommender on a Tucker decomposition of the
//! attention-weighted user × item × position tensor, updated with the
//! Tucker integrator.

use nalgebra::DVector;

use crate::error::{mismatch, Error, Result};
use crate::ids::{EntityId, IdMap};
use crate::linalg::dense::householder_qr;
use crate::linalg::{
    block_diag, dense_svd, hooi, hosvd, pad_rows, tucker2, DenseMatrix, DenseTensor3,
    HooiOptions, HooiReport, SparseTensor3, TuckerFactors,
};
use crate::psirec::{append_columns, attach_rows, AttachStrategy, Axis};
use crate::ranking::top_n;
use crate::seq_tensor::{slice_cells, AttentionSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct TuckerState {
    pub factors: TuckerFactors,
    pub user_map: IdMap,
    pub item_map: IdMap,
    pub attention: AttentionSpec,
    pub ranks: [usize; 3],
    a: DenseMatrix,
    a_inv_t: DenseMatrix,
}

/// Rejects ranks that exceed the extents or the product of the other two
/// ranks (no core of such shape can have full multilinear rank).
pub fn validate_ranks(shape: [usize; 3], ranks: [usize; 3]) -> Result<()> {
    for m in 0..3 {
        if ranks[m] == 0 {
            return Err(Error::InvalidParameter("tucker ranks must be >= 1".into()));
        }
        if ranks[m] > shape[m] {
            return Err(Error::RankTooLarge {
                op: "tucker ranks",
                rank: ranks[m],
                max: shape[m],
            });
        }
        let others: usize = (0..3).filter(|&k| k != m).map(|k| ranks[k]).product();
        if ranks[m] > others {
            return Err(Error::InvalidParameter(format!(
                "tucker rank {} of mode {m} exceeds the product {others} of the other ranks",
                ranks[m]
            )));
        }
    }
    Ok(())
}

fn mode_of(axis: Axis) -> usize {
    match axis {
        Axis::Users => 0,
        Axis::Items => 1,
    }
}

/// `(U_b ⊗ U_a)·g` without forming the Kronecker product: every column of
/// `g` is read as an `r_a × r_b` matrix `G` and mapped to `U_a·G·U_bᵀ`.
fn kron_apply(ua: &DenseMatrix, ub: &DenseMatrix, g: &DenseMatrix) -> DenseMatrix {
    let (na, nb) = (ua.nrows(), ub.nrows());
    let (ra, rb) = (ua.ncols(), ub.ncols());
    let mut out = DenseMatrix::zeros(na * nb, g.ncols());
    for c in 0..g.ncols() {
        let col: Vec<f64> = g.column(c).iter().copied().collect();
        let gm = DenseMatrix::from_column_slice(ra, rb, &col);
        let big = ua * gm * ub.transpose();
        out.column_mut(c).copy_from_slice(big.as_slice());
    }
    out
}

/// `(U_b ⊗ U_a)ᵀ·y`, the adjoint of [`kron_apply`].
fn kron_project(ua: &DenseMatrix, ub: &DenseMatrix, y: &DenseMatrix) -> DenseMatrix {
    let (na, nb) = (ua.nrows(), ub.nrows());
    let (ra, rb) = (ua.ncols(), ub.ncols());
    let mut out = DenseMatrix::zeros(ra * rb, y.ncols());
    for c in 0..y.ncols() {
        let col: Vec<f64> = y.column(c).iter().copied().collect();
        let ym = DenseMatrix::from_column_slice(na, nb, &col);
        let small = ua.tr_mul(&ym) * ub;
        out.column_mut(c).copy_from_slice(small.as_slice());
    }
    out
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

impl TuckerState {
    /// Assembles a state from existing factors; ids default to `0..n`.
    pub fn from_factors(factors: TuckerFactors, attention: AttentionSpec) -> Result<Self> {
        let shape = factors.shape();
        if shape[2] != attention.window {
            return Err(mismatch("tucker positions", attention.window, shape[2]));
        }
        let ranks = factors.ranks();
        validate_ranks(shape, ranks)?;
        Ok(Self {
            user_map: (0..shape[0] as EntityId).collect(),
            item_map: (0..shape[1] as EntityId).collect(),
            a: attention.matrix(),
            a_inv_t: attention.inverse_transpose(),
            factors,
            attention,
            ranks,
        })
    }

    /// HOOI of the attention-weighted tensor `x`.
    pub fn init(
        x: &SparseTensor3,
        ranks: [usize; 3],
        attention: AttentionSpec,
        opts: HooiOptions,
    ) -> Result<(Self, HooiReport)> {
        validate_ranks(x.shape(), ranks)?;
        let (factors, report) = hooi(x, ranks, None, opts)?;
        Ok((Self::from_factors(factors, attention)?, report))
    }

    pub fn with_maps(mut self, users: IdMap, items: IdMap) -> Result<Self> {
        if users.len() != self.n_users() || items.len() != self.n_items() {
            return Err(mismatch(
                "id maps",
                format!("{} users, {} items", self.n_users(), self.n_items()),
                format!("{} users, {} items", users.len(), items.len()),
            ));
        }
        self.user_map = users;
        self.item_map = items;
        Ok(self)
    }

    pub fn n_users(&self) -> usize {
        self.factors.u[0].nrows()
    }

    pub fn n_items(&self) -> usize {
        self.factors.u[1].nrows()
    }

    pub fn reconstruct(&self) -> DenseTensor3 {
        self.factors.reconstruct()
    }

    pub fn orthonormality_error(&self) -> f64 {
        self.factors.orthonormality_error()
    }

    /// One Tucker-integrator step absorbing an attention-weighted
    /// increment over known users and items.
    pub fn ti_update(&mut self, delta: &SparseTensor3) -> Result<()> {
        let shape = self.factors.shape();
        if delta.shape() != shape {
            return Err(mismatch("ti_update", format!("{shape:?}"), format!("{:?}", delta.shape())));
        }
        if delta.is_empty() {
            return Ok(());
        }
        let ranks = self.ranks;
        for mode in 0..3 {
            let f = &self.factors;
            let (q, r) = householder_qr(&f.core.unfold(mode)?.transpose())?;
            let s = r.transpose();
            let y = delta.project_except([&f.u[0], &f.u[1], &f.u[2]], mode)?;
            let dv = y * &q;
            let k = &f.u[mode] * &s + &dv;
            let (u1, s_hat) = householder_qr(&k)?;
            let s_tilde = s_hat - u1.tr_mul(&dv);
            let core = DenseTensor3::fold(&(s_tilde * q.transpose()), mode, ranks)?;
            self.factors.u[mode] = u1;
            self.factors.core = core;
        }
        let f = &self.factors;
        let inc = delta.project_all([&f.u[0], &f.u[1], &f.u[2]])?;
        self.factors.core = self.factors.core.add(&inc)?;
        Ok(())
    }

    /// Merges a block of entirely new users × entirely new items: the block
    /// is compressed by Tucker2 in the current position basis, stacked
    /// block-diagonally with the old core and recompressed by HOSVD.
    pub fn add_block(
        &mut self,
        delta: &SparseTensor3,
        new_users: &[EntityId],
        new_items: &[EntityId],
        opts: HooiOptions,
    ) -> Result<()> {
        check_new(&self.user_map, new_users, "user")?;
        check_new(&self.item_map, new_items, "item")?;
        let expected = [new_users.len(), new_items.len(), self.attention.window];
        if delta.shape() != expected {
            return Err(mismatch("add_block", format!("{expected:?}"), format!("{:?}", delta.shape())));
        }
        if delta.is_empty() {
            if !new_users.is_empty() || !new_items.is_empty() {
                self.factors.u[0] = pad_rows(&self.factors.u[0], new_users.len());
                self.factors.u[1] = pad_rows(&self.factors.u[1], new_items.len());
                self.extend_maps(new_users, new_items);
            }
            return Ok(());
        }
        let projected = delta.mode_product(&self.factors.u[2].transpose(), 2)?;
        let r3 = self.ranks[2];
        let k1 = self.ranks[0].min(expected[0]).min(expected[1] * r3);
        let k2 = self.ranks[1].min(expected[1]).min(expected[0] * r3);
        let (bu, bv, bcore) = tucker2(&projected, [k1, k2], opts)?;
        let stacked = self.factors.core.block_diag_12(&bcore)?;
        let mix = hosvd(&stacked, self.ranks, opts.seed)?;
        let [mu, mv, mw] = mix.u;
        self.factors.u[0] = block_diag(&self.factors.u[0], &bu) * mu;
        self.factors.u[1] = block_diag(&self.factors.u[1], &bv) * mv;
        self.factors.u[2] = &self.factors.u[2] * mw;
        self.factors.core = mix.core;
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

    /// Adds new users (or items) with interactions against known
    /// counterparts. `delta` is attention-weighted with the new entities
    /// occupying the whole `axis` extent, e.g. `ids.len() × n_items × L`
    /// for new users.
    ///
    /// The target unfolding `U_m·C_[m]·(U_b ⊗ U_a)ᵀ` is rewritten as a
    /// thin SVD, the new unfolding rows are appended by incremental SVD,
    /// and the core is refolded against the unchanged counterpart factors.
    pub fn add_mode_vectors(&mut self, delta: &SparseTensor3, axis: Axis, ids: &[EntityId]) -> Result<()> {
        if ids.is_empty() {
            return Ok(());
        }
        let m = mode_of(axis);
        let (map, kind) = match axis {
            Axis::Users => (&self.user_map, "user"),
            Axis::Items => (&self.item_map, "item"),
        };
        check_new(map, ids, kind)?;
        let mut expected = self.factors.shape();
        expected[m] = ids.len();
        if delta.shape() != expected {
            return Err(mismatch(
                "add_mode_vectors",
                format!("{expected:?}"),
                format!("{:?}", delta.shape()),
            ));
        }
        let (a, b) = if m == 0 { (1, 2) } else { (0, 2) };
        let f = &self.factors;
        let (ua, ub) = (&f.u[a], &f.u[b]);
        let rm = self.ranks[m];
        // C_[m] = Ũ·S̃·Ṽ_cᵀ, hence the wide unfolding has right vectors (U_b ⊗ U_a)·Ṽ_c
        let small = dense_svd(&f.core.unfold(m)?)?;
        let u_hat = &f.u[m] * &small.u;
        let v_tilde = kron_apply(ua, ub, &small.v);
        let cols = delta.unfold(m)?.transpose().to_dense();
        let (v_bar, s_bar, u_bar) = append_columns(&v_tilde, &small.s_matrix(), &u_hat, &cols, rm)?;
        let core_m = s_bar.transpose() * kron_project(ua, ub, &v_bar).transpose();
        let core = DenseTensor3::fold(&core_m, m, self.ranks)?;
        self.factors.u[m] = u_bar;
        self.factors.core = core;
        match axis {
            Axis::Users => self.extend_maps(ids, &[]),
            Axis::Items => self.extend_maps(&[], ids),
        }
        Ok(())
    }

    /// Placeholder rows for unseen users or items. The gaussian strategy
    /// re-orthonormalises the factor and folds `R` into the core.
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
        let m = mode_of(axis);
        let (map, kind) = match axis {
            Axis::Users => (&self.user_map, "user"),
            Axis::Items => (&self.item_map, "item"),
        };
        check_new(map, ids, kind)?;
        let (q, r) = attach_rows(&self.factors.u[m], ids.len(), strategy, seed)?;
        self.factors.u[m] = q;
        if let Some(r) = r {
            self.factors.core = self.factors.core.mode_product(&r, m)?;
        }
        match axis {
            Axis::Users => self.extend_maps(ids, &[]),
            Axis::Items => self.extend_maps(&[], ids),
        }
        Ok(())
    }

    /// `A·W·ŵ` where `ŵ` is the last row of `A⁻ᵀ·W`: the position weights
    /// that turn a shifted window into next-item relevance.
    pub fn position_weights(&self) -> DVector<f64> {
        let w = &self.factors.u[2];
        let l = self.attention.window;
        let w_hat = (self.a_inv_t.row(l - 1) * w).transpose();
        &self.a * (w * w_hat)
    }

    /// Scores of every item for a user whose current window is `window`
    /// (item rows, oldest first). The window is shifted one position
    /// towards the past before weighting, so with a full window the oldest
    /// item drops out.
    pub fn scores(&self, window: &[usize]) -> Result<Vec<f64>> {
        let n = self.n_items();
        if let Some(&bad) = window.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange {
                index: vec![bad],
                shape: vec![n],
            });
        }
        let z = self.position_weights();
        let v = &self.factors.u[1];
        let mut proj = DVector::zeros(v.ncols());
        for [_, item, pos] in slice_cells(0, window, self.attention.window) {
            if pos >= 1 {
                proj += v.row(item).transpose() * z[pos - 1];
            }
        }
        Ok((v * proj).iter().copied().collect())
    }

    pub fn recommend(&self, window: &[usize], n: usize, exclude_seen: bool) -> Result<Vec<usize>> {
        let scores = self.scores(window)?;
        Ok(top_n(&scores, n, if exclude_seen { window } else { &[] }))
    }
}

/// Warm-start factors for a tensor that gained users or items: the previous
/// factors padded with zero rows, which leaves `UᵀU` untouched.
pub fn padded_factors(prev: &TuckerFactors, shape: [usize; 3]) -> Result<TuckerFactors> {
    let old = prev.shape();
    if (0..3).any(|m| shape[m] < old[m]) || shape[2] != old[2] {
        return Err(mismatch("padded_factors", format!("{old:?} or larger"), format!("{shape:?}")));
    }
    Ok(TuckerFactors {
        core: prev.core.clone(),
        u: [
            pad_rows(&prev.u[0], shape[0] - old[0]),
            pad_rows(&prev.u[1], shape[1] - old[1]),
            prev.u[2].clone(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{gaussian_matrix, orthonormal_matrix};
    use crate::linalg::{kron, orthonormality_error};

    fn exact_tucker(shape: [usize; 3], ranks: [usize; 3], seed: u64) -> DenseTensor3 {
        let core = DenseTensor3::from_vec(ranks, gaussian_matrix(ranks.iter().product(), 1, 1.0, seed).as_slice().to_vec())
            .unwrap();
        TuckerFactors {
            core,
            u: [
                orthonormal_matrix(shape[0], ranks[0], seed + 1),
                orthonormal_matrix(shape[1], ranks[1], seed + 2),
                orthonormal_matrix(shape[2], ranks[2], seed + 3),
            ],
        }
        .reconstruct()
    }

    fn state_of(x: &DenseTensor3, ranks: [usize; 3]) -> TuckerState {
        let spec = AttentionSpec::new(x.shape()[2], 1.0).unwrap();
        let opts = HooiOptions { tol: 1e-14, max_iters: 200, seed: 0 };
        TuckerState::init(&SparseTensor3::from_dense(x), ranks, spec, opts).unwrap().0
    }

    #[test]
    fn kron_helpers_match_explicit_product() {
        let ua = orthonormal_matrix(4, 2, 1);
        let ub = orthonormal_matrix(3, 2, 2);
        let g = gaussian_matrix(4, 3, 1.0, 3);
        let k = kron(&ub, &ua);
        assert!((kron_apply(&ua, &ub, &g) - &k * &g).amax() < 1e-12);
        let y = gaussian_matrix(12, 2, 1.0, 4);
        assert!((kron_project(&ua, &ub, &y) - k.transpose() * &y).amax() < 1e-12);
    }

    #[test]
    fn rank_validation() {
        assert!(validate_ranks([5, 5, 3], [2, 2, 5]).is_err());
        assert!(validate_ranks([5, 5, 3], [1, 4, 2]).is_err());
        assert!(validate_ranks([5, 5, 3], [2, 2, 3]).is_ok());
    }

    #[test]
    fn zero_increment_preserves() {
        let x = exact_tucker([6, 5, 3], [2, 2, 2], 3);
        let mut st = state_of(&x, [2, 2, 2]);
        let before = st.reconstruct();
        st.ti_update(&SparseTensor3::empty([6, 5, 3])).unwrap();
        assert!(st.reconstruct().sub(&before).unwrap().frobenius_norm() < 1e-10);
        assert!(st.ti_update(&SparseTensor3::empty([6, 5, 2])).is_err());
    }

    #[test]
    fn integrator_exact_on_fixed_rank_pair() {
        let x0 = exact_tucker([7, 6, 4], [3, 2, 2], 10);
        let x1 = exact_tucker([7, 6, 4], [3, 2, 2], 40);
        let mut st = state_of(&x0, [3, 2, 2]);
        assert!(st.reconstruct().sub(&x0).unwrap().frobenius_norm() < 1e-10);
        let delta = SparseTensor3::from_dense(&x1.sub(&st.reconstruct()).unwrap());
        st.ti_update(&delta).unwrap();
        assert!(st.reconstruct().sub(&x1).unwrap().frobenius_norm() < 1e-6);
        assert!(st.orthonormality_error() < 1e-12);
    }

    #[test]
    fn block_addition_exact_when_ranks_suffice() {
        // rank (1,1,1) data stored at ranks (2,2,2): room for one more block
        let x = exact_tucker([3, 3, 2], [1, 1, 1], 2);
        let mut st = state_of(&x, [2, 2, 2]);
        let d = SparseTensor3::new([1, 1, 2], vec![([0, 0, 0], 1.0), ([0, 0, 1], 0.5)]).unwrap();
        st.add_block(&d, &[3], &[3], HooiOptions::default()).unwrap();
        let oracle = x.block_diag_12(&d.to_dense()).unwrap();
        assert!(st.reconstruct().sub(&oracle).unwrap().frobenius_norm() < 1e-8);
        assert!(st.orthonormality_error() < 1e-10);
        assert!(st.add_block(&d, &[3], &[7], HooiOptions::default()).is_err());
    }

    #[test]
    fn mode_vectors_exact_when_ranks_suffice() {
        let x = exact_tucker([4, 3, 2], [2, 3, 2], 5);
        let mut st = state_of(&x, [3, 3, 2]);
        let d = SparseTensor3::new([1, 3, 2], vec![([0, 1, 1], 1.0)]).unwrap();
        st.add_mode_vectors(&d, Axis::Users, &[4]).unwrap();
        let mut stacked = DenseTensor3::zeros([5, 3, 2]);
        for i in 0..4 {
            for j in 0..3 {
                for k in 0..2 {
                    stacked.set([i, j, k], x.get([i, j, k]));
                }
            }
        }
        stacked.set([4, 1, 1], 1.0);
        assert!(st.reconstruct().sub(&stacked).unwrap().frobenius_norm() < 1e-8);
        assert!(st.orthonormality_error() < 1e-10);
        assert_eq!(st.user_map.row(4), Some(4));
    }

    #[test]
    fn new_items_use_user_position_kronecker() {
        let x = exact_tucker([3, 4, 2], [3, 2, 2], 8);
        let mut st = state_of(&x, [3, 3, 2]);
        let d = SparseTensor3::new([3, 1, 2], vec![([2, 0, 0], 1.0), ([0, 0, 1], 0.5)]).unwrap();
        st.add_mode_vectors(&d, Axis::Items, &[4]).unwrap();
        let expected = DenseTensor3::from_fn([3, 5, 2], |[i, j, k]| {
            if j < 4 {
                x.get([i, j, k])
            } else {
                d.get([i, 0, k])
            }
        });
        assert!(st.reconstruct().sub(&expected).unwrap().frobenius_norm() < 1e-8);
    }

    #[test]
    fn attachment_strategies() {
        let x = exact_tucker([5, 4, 3], [2, 2, 2], 1);
        let mut st = state_of(&x, [2, 2, 2]);
        let core = st.factors.core.clone();
        st.attach_embeddings(&[5, 6], Axis::Users, AttachStrategy::Zero, 0).unwrap();
        assert_eq!(st.factors.core, core);
        assert_eq!(st.factors.u[0].rows(5, 2).amax(), 0.0);
        let before = st.reconstruct();
        st.attach_embeddings(&[4], Axis::Items, AttachStrategy::Gaussian { sigma: 1e-5 }, 2)
            .unwrap();
        assert!(orthonormality_error(&st.factors.u[1]) < 1e-10);
        let after = st.reconstruct();
        for i in 0..7 {
            for j in 0..4 {
                for k in 0..3 {
                    assert!((after.get([i, j, k]) - before.get([i, j, k])).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn scores_match_dense_formula() {
        let x = exact_tucker([5, 6, 4], [2, 3, 2], 9);
        let st = state_of(&x, [2, 3, 2]);
        let l = 4;
        let a = st.attention.matrix();
        let w = st.factors.u[2].clone();
        let v = st.factors.u[1].clone();
        let window = [3usize, 0, 5];
        let mut p = DenseMatrix::zeros(6, l);
        for (k, &i) in window.iter().enumerate() {
            p[(i, l - window.len() + k)] = 1.0;
        }
        let shift = DenseMatrix::from_fn(l, l, |i, j| if i == j + 1 { 1.0 } else { 0.0 });
        let a_inv_t = a.clone().try_inverse().unwrap().transpose();
        let w_hat = (a_inv_t * &w).row(l - 1).transpose();
        let oracle = &v * v.transpose() * &p * shift * &a * &w * w_hat;
        let scores = st.scores(&window).unwrap();
        for j in 0..6 {
            assert!((scores[j] - oracle[j]).abs() < 1e-10);
        }
        let empty = st.scores(&[]).unwrap();
        assert!(empty.iter().all(|&s| s == 0.0));
        assert_eq!(st.recommend(&[], 2, true).unwrap(), vec![0, 1]);
        assert!(!st.recommend(&window, 6, true).unwrap().contains(&3));
        assert!(st.scores(&[6]).is_err());
    }

    #[test]
    fn full_window_drops_oldest() {
        let x = exact_tucker([5, 6, 3], [2, 3, 2], 4);
        let st = state_of(&x, [2, 3, 2]);
        let a = st.scores(&[1, 2, 3]).unwrap();
        let b = st.scores(&[4, 2, 3]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn padding_keeps_orthonormality() {
        let x = exact_tucker([5, 4, 3], [2, 2, 2], 3);
        let st = state_of(&x, [2, 2, 2]);
        let p = padded_factors(&st.factors, [7, 6, 3]).unwrap();
        assert!(p.orthonormality_error() < 1e-12);
        assert!(padded_factors(&st.factors, [4, 6, 3]).is_err());
    }
}

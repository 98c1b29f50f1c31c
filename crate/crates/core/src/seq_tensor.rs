//! Event logs, per-user positional histories and the interaction tensor
//! built from them, plus the attention weighting and the exact per-chunk
//! increments fed to the integrators.
//!
//! Positions are zero-based: a user window of length `L` places its most
//! recent item at position `L − 1` and pads absent positions at the front.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{EntityId, IdMap};
use crate::linalg::{DenseMatrix, SparseMatrix, SparseTensor3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub user: EntityId,
    pub item: EntityId,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
}

/// Time-ordered implicit interactions plus the vocabularies that translate
/// entity codes back to the external ids found in the input file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
    pub users: Vec<String>,
    pub items: Vec<String>,
}

impl EventLog {
    /// Stable sort by timestamp; equal timestamps keep input order.
    pub fn sort(&mut self) {
        self.events.sort_by_key(|e| e.timestamp);
    }

    pub fn is_sorted(&self) -> bool {
        self.events.windows(2).all(|w| w[0].timestamp <= w[1].timestamp)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Same vocabularies, different events.
    pub fn with_events(&self, events: Vec<Event>) -> EventLog {
        EventLog {
            events,
            users: self.users.clone(),
            items: self.items.clone(),
        }
    }

    pub fn distinct_users(&self) -> usize {
        self.events.iter().map(|e| e.user).collect::<HashSet<_>>().len()
    }

    pub fn distinct_items(&self) -> usize {
        self.events.iter().map(|e| e.item).collect::<HashSet<_>>().len()
    }
}

/// A user's retained window, most recent item last.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserHistory {
    pub user: usize,
    pub items: Vec<usize>,
}

/// Per-user ordered distinct item sequences. Re-consuming an item moves it
/// to the most recent slot, so a window never holds the same item twice.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HistoryStore {
    seqs: Vec<Vec<usize>>,
    pairs: HashSet<(usize, usize)>,
}

impl HistoryStore {
    pub fn new(n_users: usize) -> Self {
        Self {
            seqs: vec![Vec::new(); n_users],
            pairs: HashSet::new(),
        }
    }

    pub fn n_users(&self) -> usize {
        self.seqs.len()
    }

    pub fn ensure_users(&mut self, n_users: usize) {
        if self.seqs.len() < n_users {
            self.seqs.resize(n_users, Vec::new());
        }
    }

    /// Appends an interaction; returns `true` when the pair is new.
    pub fn record(&mut self, user: usize, item: usize) -> bool {
        self.ensure_users(user + 1);
        let fresh = self.pairs.insert((user, item));
        let seq = &mut self.seqs[user];
        if !fresh {
            if let Some(p) = seq.iter().rposition(|&i| i == item) {
                seq.remove(p);
            }
        }
        seq.push(item);
        fresh
    }

    pub fn contains(&self, user: usize, item: usize) -> bool {
        self.pairs.contains(&(user, item))
    }

    pub fn sequence(&self, user: usize) -> &[usize] {
        self.seqs.get(user).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The last `min(n, window)` distinct items of `user`.
    pub fn window(&self, user: usize, window: usize) -> &[usize] {
        let s = self.sequence(user);
        &s[s.len().saturating_sub(window)..]
    }

    pub fn histories(&self, window: usize) -> Vec<UserHistory> {
        (0..self.seqs.len())
            .map(|u| UserHistory {
                user: u,
                items: self.window(u, window).to_vec(),
            })
            .collect()
    }

    /// Number of items a user has consumed (distinct).
    pub fn activity(&self, user: usize) -> usize {
        self.sequence(user).len()
    }
}

/// Windows of length at most `window` from ordered `(user, item)` pairs
/// whose indices are already dense. Users without events are omitted.
pub fn build_histories(
    pairs: impl IntoIterator<Item = (usize, usize)>,
    window: usize,
) -> Vec<UserHistory> {
    let mut store = HistoryStore::new(0);
    for (u, i) in pairs {
        store.record(u, i);
    }
    store
        .histories(window)
        .into_iter()
        .filter(|h| !h.items.is_empty())
        .collect()
}

/// Cells of one user's positional slice: item at window slot `p` of a
/// window holding `n` items sits at position `L − n + p`.
pub fn slice_cells(user: usize, items: &[usize], window: usize) -> impl Iterator<Item = [usize; 3]> + '_ {
    let offset = window - items.len().min(window);
    items
        .iter()
        .skip(items.len().saturating_sub(window))
        .enumerate()
        .map(move |(p, &item)| [user, item, offset + p])
}

/// Binary positional tensor of shape `n_users × n_items × window`.
pub fn build_tensor(
    histories: &[UserHistory],
    n_users: usize,
    n_items: usize,
    window: usize,
) -> Result<SparseTensor3> {
    let mut entries = Vec::new();
    for h in histories {
        for idx in slice_cells(h.user, &h.items, window) {
            entries.push((idx, 1.0));
        }
    }
    SparseTensor3::new([n_users, n_items, window], entries)
}

/// Window length and scaling exponent of the positional attention matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionSpec {
    pub window: usize,
    pub power: f64,
}

impl AttentionSpec {
    pub fn new(window: usize, power: f64) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidParameter("attention window must be >= 1".into()));
        }
        if !(power >= 0.0 && power.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "attention power must be finite and >= 0, got {power}"
            )));
        }
        Ok(Self { window, power })
    }

    /// Weight on the band `offset` below the diagonal: `(offset + 1)^(−f)`.
    pub fn band(&self, offset: usize) -> f64 {
        ((offset + 1) as f64).powf(-self.power)
    }

    /// Lower-triangular Toeplitz matrix with unit diagonal.
    pub fn matrix(&self) -> DenseMatrix {
        let l = self.window;
        DenseMatrix::from_fn(l, l, |i, j| if i >= j { self.band(i - j) } else { 0.0 })
    }

    /// `A⁻ᵀ`, by back-substitution on the upper-triangular `Aᵀ`.
    pub fn inverse_transpose(&self) -> DenseMatrix {
        let l = self.window;
        let at = self.matrix().transpose();
        let mut x = DenseMatrix::zeros(l, l);
        for col in 0..l {
            for row in (0..l).rev() {
                let mut acc = if row == col { 1.0 } else { 0.0 };
                for k in row + 1..l {
                    acc -= at[(row, k)] * x[(k, col)];
                }
                x[(row, col)] = acc / at[(row, row)];
            }
        }
        x
    }
}

pub fn attention_matrix(spec: &AttentionSpec) -> DenseMatrix {
    spec.matrix()
}

/// `x ×₃ Aᵀ`: an interaction at position `k` spreads to every position
/// `c ≤ k` with weight `a[k][c]`.
pub fn apply_attention(x: &SparseTensor3, a: &DenseMatrix) -> Result<SparseTensor3> {
    let l = x.shape()[2];
    if a.shape() != (l, l) {
        return Err(crate::error::mismatch(
            "apply_attention",
            format!("{l}×{l}"),
            format!("{}×{}", a.nrows(), a.ncols()),
        ));
    }
    x.mode_product(&a.transpose(), 2)
}

/// Raw (unweighted) slice difference for users whose windows change.
pub(crate) fn raw_window_diff(
    users: impl IntoIterator<Item = (usize, Vec<usize>, Vec<usize>)>,
    window: usize,
    mut keep_item: impl FnMut(usize, usize) -> bool,
) -> Vec<([usize; 3], f64)> {
    let mut out = Vec::new();
    for (u, old, new) in users {
        for idx in slice_cells(u, &old, window) {
            if keep_item(u, idx[1]) {
                out.push((idx, -1.0));
            }
        }
        for idx in slice_cells(u, &new, window) {
            if keep_item(u, idx[1]) {
                out.push((idx, 1.0));
            }
        }
    }
    out
}

/// Attention-weighted increment `(X_new − X_old) ×₃ Aᵀ` caused by
/// `new_events` on top of `old`. Every index must already be known.
pub fn delta_tensor(
    old: &HistoryStore,
    new_events: &[(usize, usize)],
    n_items: usize,
    spec: &AttentionSpec,
) -> Result<SparseTensor3> {
    let l = spec.window;
    let mut touched: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(u, i) in new_events {
        if u >= old.n_users() {
            return Err(Error::UnknownEntity { kind: "user", id: u as u32 });
        }
        if i >= n_items {
            return Err(Error::UnknownEntity { kind: "item", id: i as u32 });
        }
        let seq = touched
            .entry(u)
            .or_insert_with(|| old.sequence(u).to_vec());
        if let Some(p) = seq.iter().rposition(|&x| x == i) {
            seq.remove(p);
        }
        seq.push(i);
    }
    let diffs = touched.into_iter().map(|(u, seq)| {
        let old_w = old.window(u, l).to_vec();
        let new_w = seq[seq.len().saturating_sub(l)..].to_vec();
        (u, old_w, new_w)
    });
    let raw = SparseTensor3::from_accumulated(
        [old.n_users(), n_items, l],
        raw_window_diff(diffs, l, |_, _| true),
    )?;
    apply_attention(&raw, &spec.matrix())
}

/// Binary increment of the user–item matrix: `1` for every pair not seen
/// before, repeated pairs contribute nothing.
pub fn delta_matrix(
    old: &HistoryStore,
    new_events: &[(usize, usize)],
    n_items: usize,
) -> Result<SparseMatrix> {
    let mut fresh = HashSet::new();
    let mut entries = Vec::new();
    for &(u, i) in new_events {
        if u >= old.n_users() {
            return Err(Error::UnknownEntity { kind: "user", id: u as u32 });
        }
        if i >= n_items {
            return Err(Error::UnknownEntity { kind: "item", id: i as u32 });
        }
        if !old.contains(u, i) && fresh.insert((u, i)) {
            entries.push(([u, i], 1.0));
        }
    }
    SparseMatrix::new([old.n_users(), n_items], entries)
}

/// Binary user–item matrix of a history store.
pub fn interaction_matrix(store: &HistoryStore, n_items: usize) -> Result<SparseMatrix> {
    let mut entries = Vec::new();
    for u in 0..store.n_users() {
        for &i in store.sequence(u) {
            entries.push(([u, i], 1.0));
        }
    }
    SparseMatrix::new([store.n_users(), n_items], entries)
}

/// Attention-weighted positional tensor of a history store.
pub fn weighted_tensor(store: &HistoryStore, n_items: usize, spec: &AttentionSpec) -> Result<SparseTensor3> {
    let raw = build_tensor(&store.histories(spec.window), store.n_users(), n_items, spec.window)?;
    apply_attention(&raw, &spec.matrix())
}

/// Cumulative interactions in model row coordinates: the id maps fix the
/// row order, the history store keeps per-user sequences.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Interactions {
    pub users: IdMap,
    pub items: IdMap,
    pub history: HistoryStore,
}

impl Interactions {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rows assigned in order of first appearance.
    pub fn from_events(events: &[Event]) -> Self {
        let mut data = Self::new();
        for e in events {
            data.record(e.user, e.item);
        }
        data
    }

    /// Records one interaction, registering unseen ids at the end. Returns
    /// `true` when the pair is new.
    pub fn record(&mut self, user: EntityId, item: EntityId) -> bool {
        let u = self.users.insert(user);
        let i = self.items.insert(item);
        self.history.record(u, i)
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn matrix(&self) -> Result<SparseMatrix> {
        let mut store = self.history.clone();
        store.ensure_users(self.n_users());
        interaction_matrix(&store, self.n_items())
    }

    /// Attention-weighted positional tensor.
    pub fn tensor(&self, spec: &AttentionSpec) -> Result<SparseTensor3> {
        let mut store = self.history.clone();
        store.ensure_users(self.n_users());
        weighted_tensor(&store, self.n_items(), spec)
    }

    /// Item rows consumed by `user`, oldest first; empty for unknown users.
    pub fn items_of(&self, user: EntityId) -> &[usize] {
        match self.users.row(user) {
            Some(u) => self.history.sequence(u),
            None => &[],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseTensor3;

    #[test]
    fn most_recent_item_sits_at_last_position() {
        let h = build_histories([(0, 7), (0, 8), (0, 9)], 5);
        assert_eq!(h[0].items, vec![7, 8, 9]);
        let t = build_tensor(&h, 1, 10, 5).unwrap();
        let cells: Vec<_> = t.entries().iter().map(|e| e.0).collect();
        assert_eq!(cells, vec![[0, 7, 2], [0, 8, 3], [0, 9, 4]]);
    }

    #[test]
    fn truncation_keeps_last_window() {
        let pairs: Vec<_> = (0..7).map(|i| (0, i)).collect();
        let h = build_histories(pairs, 5);
        assert_eq!(h[0].items, vec![2, 3, 4, 5, 6]);
        assert!(build_histories(Vec::<(usize, usize)>::new(), 5).is_empty());
    }

    #[test]
    fn single_interaction_and_shared_item() {
        let h = build_histories([(0, 1)], 3);
        let t = build_tensor(&h, 1, 2, 3).unwrap();
        assert_eq!(t.entries(), &[([0, 1, 2], 1.0)]);
        let h = build_histories([(0, 4), (1, 4)], 3);
        let t = build_tensor(&h, 2, 5, 3).unwrap();
        assert_eq!(t.nnz(), 2);
        assert_eq!(t.entries()[0].0[0], 0);
        assert_eq!(t.entries()[1].0[0], 1);
    }

    #[test]
    fn nnz_counts_retained_interactions() {
        let pairs = vec![(0, 1), (0, 2), (1, 3), (0, 3), (0, 4), (2, 0), (0, 5)];
        let h = build_histories(pairs, 3);
        let t = build_tensor(&h, 3, 6, 3).unwrap();
        let expected: usize = h.iter().map(|h| h.items.len().min(3)).sum();
        assert_eq!(t.nnz(), expected);
        assert!(build_tensor(&h, 2, 6, 3).is_err());
    }

    #[test]
    fn repeated_item_keeps_latest_occurrence() {
        let h = build_histories([(0, 1), (0, 2), (0, 1)], 4);
        assert_eq!(h[0].items, vec![2, 1]);
    }

    #[test]
    fn attention_matrix_bands() {
        let a = AttentionSpec::new(4, 0.0).unwrap().matrix();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a[(i, j)], if i >= j { 1.0 } else { 0.0 });
            }
        }
        let a = AttentionSpec::new(3, 1.0).unwrap().matrix();
        assert_eq!(a[(0, 0)], 1.0);
        assert_eq!(a[(1, 0)], 0.5);
        assert!((a[(2, 0)] - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(a[(2, 1)], 0.5);
        let a = AttentionSpec::new(20, 2.0).unwrap().matrix();
        assert!((a[(19, 0)] - 0.0025).abs() < 1e-15);
        assert!(AttentionSpec::new(0, 1.0).is_err());
        assert!(AttentionSpec::new(3, -1.0).is_err());
    }

    #[test]
    fn inverse_transpose_is_exact_inverse() {
        for &f in &[0.0, 1.0, 2.0, 4.0] {
            let spec = AttentionSpec::new(6, f).unwrap();
            let prod = spec.matrix().transpose() * spec.inverse_transpose();
            assert!((prod - DenseMatrix::identity(6, 6)).amax() < 1e-12);
        }
    }

    #[test]
    fn attention_identity_and_support() {
        let x = SparseTensor3::new([1, 2, 4], vec![([0, 1, 2], 1.0)]).unwrap();
        let eye = DenseMatrix::identity(4, 4);
        assert_eq!(apply_attention(&x, &eye).unwrap(), x);
        let spec = AttentionSpec::new(4, 1.0).unwrap();
        let a = spec.matrix();
        let y = apply_attention(&x, &a).unwrap();
        // mode-product oracle on the dense tensor
        let oracle = x.to_dense().mode_product(&a.transpose(), 2).unwrap();
        assert_eq!(y.to_dense(), oracle);
        let support: Vec<usize> = y.entries().iter().map(|e| e.0[2]).collect();
        assert_eq!(support, vec![0, 1, 2]);
        for &(idx, v) in y.entries() {
            assert_eq!(v, a[(2, idx[2])]);
        }
        assert!(apply_attention(&x, &DenseMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn all_ones_attention_smears_with_unit_weight() {
        let x = SparseTensor3::new([1, 1, 5], vec![([0, 0, 3], 1.0)]).unwrap();
        let a = AttentionSpec::new(5, 0.0).unwrap().matrix();
        let y = apply_attention(&x, &a).unwrap();
        let dense: DenseTensor3 = y.to_dense();
        for k in 0..5 {
            assert_eq!(dense.get([0, 0, k]), if k <= 3 { 1.0 } else { 0.0 });
        }
    }

    fn rebuilt(store: &HistoryStore, n_items: usize, spec: &AttentionSpec) -> DenseTensor3 {
        weighted_tensor(store, n_items, spec).unwrap().to_dense()
    }

    fn check_delta(initial: &[(usize, usize)], chunk: &[(usize, usize)], n_users: usize, n_items: usize, l: usize) {
        let spec = AttentionSpec::new(l, 1.0).unwrap();
        let mut old = HistoryStore::new(n_users);
        for &(u, i) in initial {
            old.record(u, i);
        }
        let delta = delta_tensor(&old, chunk, n_items, &spec).unwrap();
        let mut new = old.clone();
        for &(u, i) in chunk {
            new.record(u, i);
        }
        let lhs = rebuilt(&old, n_items, &spec).add(&delta.to_dense()).unwrap();
        let rhs = rebuilt(&new, n_items, &spec);
        assert!(lhs.sub(&rhs).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn delta_empty_when_no_events() {
        let old = HistoryStore::new(2);
        let spec = AttentionSpec::new(3, 0.0).unwrap();
        assert!(delta_tensor(&old, &[], 4, &spec).unwrap().is_empty());
    }

    #[test]
    fn delta_with_position_shift() {
        check_delta(&[(0, 0), (0, 1)], &[(0, 2)], 1, 3, 4);
        let spec = AttentionSpec::new(4, 0.0).unwrap();
        let mut old = HistoryStore::new(1);
        old.record(0, 0);
        old.record(0, 1);
        let raw = delta_tensor(&old, &[(0, 2)], 3, &AttentionSpec::new(4, 0.0).unwrap())
            .unwrap()
            .mode_product(&spec.inverse_transpose(), 2)
            .unwrap();
        // un-weighted: new cell plus shift cancellation cells
        let mut cells: Vec<_> = raw
            .entries()
            .iter()
            .filter(|(_, v)| v.abs() > 1e-12)
            .map(|&(i, v)| (i, v.round() as i64))
            .collect();
        cells.sort();
        assert_eq!(
            cells,
            vec![([0, 0, 1], 1), ([0, 0, 2], -1), ([0, 1, 2], 1), ([0, 1, 3], -1), ([0, 2, 3], 1)]
        );
    }

    #[test]
    fn delta_at_window_capacity_drops_oldest() {
        check_delta(&[(0, 0), (0, 1), (0, 2)], &[(0, 3)], 1, 4, 3);
        check_delta(&[(0, 0), (0, 1), (1, 2), (0, 2)], &[(0, 3), (1, 0), (0, 0), (0, 3)], 2, 4, 3);
    }

    #[test]
    fn delta_rejects_unknown_ids() {
        let old = HistoryStore::new(1);
        let spec = AttentionSpec::new(3, 0.0).unwrap();
        assert!(matches!(
            delta_tensor(&old, &[(1, 0)], 2, &spec),
            Err(Error::UnknownEntity { kind: "user", .. })
        ));
        assert!(delta_matrix(&old, &[(0, 5)], 2).is_err());
    }

    #[test]
    fn delta_matrix_binarises() {
        let mut old = HistoryStore::new(2);
        old.record(0, 0);
        let d = delta_matrix(&old, &[(1, 1)], 2).unwrap();
        assert_eq!(d.entries(), &[([1, 1], 1.0)]);
        assert!(delta_matrix(&old, &[(0, 0)], 2).unwrap().is_empty());
        let d = delta_matrix(&old, &[(1, 0), (1, 1), (1, 0)], 2).unwrap();
        assert_eq!(d.nnz(), 2);
    }
}

//! Coordinate-format sparse matrices and order-3 tensors.
//!
//! Entries are kept in canonical form: sorted lexicographically by index,
//! no duplicates, no explicit zeros. Two equal sparse objects therefore have
//! identical entry vectors, which the streaming code relies on for
//! reproducible runs.

use std::collections::{BTreeMap, HashMap};

use super::dense::DenseMatrix;
use super::tensor::DenseTensor3;
use crate::error::{mismatch, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SparseCoo<const D: usize> {
    shape: [usize; D],
    entries: Vec<([usize; D], f64)>,
}

pub type SparseMatrix = SparseCoo<2>;
pub type SparseTensor3 = SparseCoo<3>;

impl<const D: usize> SparseCoo<D> {
    pub fn empty(shape: [usize; D]) -> Self {
        Self {
            shape,
            entries: Vec::new(),
        }
    }

    /// Strict constructor: rejects out-of-range indices, duplicates,
    /// non-finite values and explicit zeros.
    pub fn new(shape: [usize; D], mut entries: Vec<([usize; D], f64)>) -> Result<Self> {
        for (idx, v) in &entries {
            check_index(idx, &shape)?;
            if !v.is_finite() {
                return Err(Error::NonFinite("sparse entry"));
            }
            if *v == 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "explicit zero stored at {idx:?}"
                )));
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateIndex(w[0].0.to_vec()));
        }
        Ok(Self { shape, entries })
    }

    /// Sums duplicate indices and drops entries that cancel to exactly zero.
    pub fn from_accumulated(
        shape: [usize; D],
        entries: impl IntoIterator<Item = ([usize; D], f64)>,
    ) -> Result<Self> {
        let mut acc: BTreeMap<[usize; D], f64> = BTreeMap::new();
        for (idx, v) in entries {
            check_index(&idx, &shape)?;
            if !v.is_finite() {
                return Err(Error::NonFinite("sparse entry"));
            }
            *acc.entry(idx).or_insert(0.0) += v;
        }
        Ok(Self {
            shape,
            entries: acc.into_iter().filter(|(_, v)| *v != 0.0).collect(),
        })
    }

    pub fn shape(&self) -> [usize; D] {
        self.shape
    }

    pub fn entries(&self) -> &[([usize; D], f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, idx: [usize; D]) -> f64 {
        self.entries
            .binary_search_by(|e| e.0.cmp(&idx))
            .map(|p| self.entries[p].1)
            .unwrap_or(0.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        if alpha == 0.0 {
            return Self::empty(self.shape);
        }
        Self {
            shape: self.shape,
            entries: self.entries.iter().map(|&(i, v)| (i, alpha * v)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(mismatch(
                "sparse add",
                format!("{:?}", self.shape),
                format!("{:?}", other.shape),
            ));
        }
        Self::from_accumulated(
            self.shape,
            self.entries.iter().chain(other.entries.iter()).copied(),
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }

    /// Re-embeds the entries in a larger shape (indices unchanged).
    pub fn with_shape(&self, shape: [usize; D]) -> Result<Self> {
        for (idx, _) in &self.entries {
            check_index(idx, &shape)?;
        }
        Ok(Self {
            shape,
            entries: self.entries.clone(),
        })
    }
}

fn check_index<const D: usize>(idx: &[usize; D], shape: &[usize; D]) -> Result<()> {
    if idx.iter().zip(shape).any(|(i, n)| i >= n) {
        return Err(Error::IndexOutOfRange {
            index: idx.to_vec(),
            shape: shape.to_vec(),
        });
    }
    Ok(())
}

impl SparseMatrix {
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.shape[0], self.shape[1]);
        for &([i, j], v) in &self.entries {
            out[(i, j)] = v;
        }
        out
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    entries.push(([i, j], m[(i, j)]));
                }
            }
        }
        Self {
            shape: [m.nrows(), m.ncols()],
            entries,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&([i, j], v)| ([j, i], v)).collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        Self {
            shape: [self.shape[1], self.shape[0]],
            entries,
        }
    }

    /// `self · d`
    pub fn mul_dense(&self, d: &DenseMatrix) -> Result<DenseMatrix> {
        if d.nrows() != self.cols() {
            return Err(mismatch("sparse·dense", self.cols(), d.nrows()));
        }
        let k = d.ncols();
        let mut out = DenseMatrix::zeros(self.rows(), k);
        for &([i, j], v) in &self.entries {
            for c in 0..k {
                out[(i, c)] += v * d[(j, c)];
            }
        }
        Ok(out)
    }

    /// `selfᵀ · d`
    pub fn tr_mul_dense(&self, d: &DenseMatrix) -> Result<DenseMatrix> {
        if d.nrows() != self.rows() {
            return Err(mismatch("sparseᵀ·dense", self.rows(), d.nrows()));
        }
        let k = d.ncols();
        let mut out = DenseMatrix::zeros(self.cols(), k);
        for &([i, j], v) in &self.entries {
            for c in 0..k {
                out[(j, c)] += v * d[(i, c)];
            }
        }
        Ok(out)
    }

    /// `self · selfᵀ` (rows × rows), accumulated column by column.
    pub fn gram_rows(&self) -> DenseMatrix {
        let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.cols()];
        for &([i, j], v) in &self.entries {
            by_col[j].push((i, v));
        }
        let mut g = DenseMatrix::zeros(self.rows(), self.rows());
        for col in &by_col {
            for &(a, va) in col {
                for &(b, vb) in col {
                    g[(a, b)] += va * vb;
                }
            }
        }
        g
    }

    /// Rows `[start, start + count)` re-indexed from zero.
    pub fn row_block(&self, start: usize, count: usize) -> Self {
        let entries = self
            .entries
            .iter()
            .filter(|([i, _], _)| *i >= start && *i < start + count)
            .map(|&([i, j], v)| ([i - start, j], v))
            .collect();
        Self {
            shape: [count, self.shape[1]],
            entries,
        }
    }
}

impl SparseTensor3 {
    pub fn to_dense(&self) -> DenseTensor3 {
        let mut out = DenseTensor3::zeros(self.shape);
        for &(idx, v) in &self.entries {
            out.set(idx, v);
        }
        out
    }

    pub fn from_dense(t: &DenseTensor3) -> Self {
        let [n1, n2, n3] = t.shape();
        let mut entries = Vec::new();
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..n3 {
                    let v = t.get([i, j, k]);
                    if v != 0.0 {
                        entries.push(([i, j, k], v));
                    }
                }
            }
        }
        Self {
            shape: t.shape(),
            entries,
        }
    }

    /// Mode-`mode` unfolding with the same column convention as
    /// [`DenseTensor3::unfold`].
    pub fn unfold(&self, mode: usize) -> Result<SparseMatrix> {
        let (rows, cols) = super::tensor::unfolded_shape(self.shape, mode)?;
        let mut entries: Vec<_> = self
            .entries
            .iter()
            .map(|&(idx, v)| {
                let (r, c) = super::tensor::unfold_index(self.shape, mode, idx);
                ([r, c], v)
            })
            .collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(SparseMatrix {
            shape: [rows, cols],
            entries,
        })
    }

    /// `self ×_mode m` for a dense `m` whose column count equals the mode extent.
    pub fn mode_product(&self, m: &DenseMatrix, mode: usize) -> Result<SparseTensor3> {
        if mode > 2 {
            return Err(Error::InvalidMode(mode));
        }
        if m.ncols() != self.shape[mode] {
            return Err(mismatch("sparse mode product", self.shape[mode], m.ncols()));
        }
        let mut shape = self.shape;
        shape[mode] = m.nrows();
        let mut out = Vec::with_capacity(self.entries.len());
        for &(idx, v) in &self.entries {
            for r in 0..m.nrows() {
                let w = m[(r, idx[mode])];
                if w != 0.0 {
                    let mut j = idx;
                    j[mode] = r;
                    out.push((j, v * w));
                }
            }
        }
        SparseTensor3::from_accumulated(shape, out)
    }

    /// Unfolding of `self ×_k fₖᵀ` over every mode `k ≠ skip`, taken along
    /// `skip`. Result is `n_skip × (r_a·r_b)` with the lower remaining mode
    /// varying fastest in the column index.
    pub fn project_except(&self, factors: [&DenseMatrix; 3], skip: usize) -> Result<DenseMatrix> {
        if skip > 2 {
            return Err(Error::InvalidMode(skip));
        }
        let (a, b) = other_modes(skip);
        for k in [a, b] {
            if factors[k].nrows() != self.shape[k] {
                return Err(mismatch("project_except", self.shape[k], factors[k].nrows()));
            }
        }
        let (ra, rb) = (factors[a].ncols(), factors[b].ncols());
        let (fa, fb) = (factors[a], factors[b]);
        // contract mode `a` first, one length-`ra` vector per distinct
        // (b, skip) index pair, then spread each over the `b` factor row
        let mut slots: HashMap<(usize, usize), usize> = HashMap::new();
        let mut keys = Vec::new();
        let mut partial: Vec<f64> = Vec::new();
        for &(idx, v) in &self.entries {
            let key = (idx[b], idx[skip]);
            let slot = *slots.entry(key).or_insert_with(|| {
                keys.push(key);
                partial.resize(partial.len() + ra, 0.0);
                keys.len() - 1
            });
            let acc = &mut partial[slot * ra..(slot + 1) * ra];
            for (p, x) in acc.iter_mut().enumerate() {
                *x += v * fa[(idx[a], p)];
            }
        }
        let mut out = DenseMatrix::zeros(self.shape[skip], ra * rb);
        for (slot, &(jb, row)) in keys.iter().enumerate() {
            let acc = &partial[slot * ra..(slot + 1) * ra];
            for q in 0..rb {
                let w = fb[(jb, q)];
                if w == 0.0 {
                    continue;
                }
                for (p, x) in acc.iter().enumerate() {
                    out[(row, p + ra * q)] += w * x;
                }
            }
        }
        Ok(out)
    }

    /// `self ×₁ f₀ᵀ ×₂ f₁ᵀ ×₃ f₂ᵀ` as a dense core.
    pub fn project_all(&self, factors: [&DenseMatrix; 3]) -> Result<DenseTensor3> {
        let y = self.project_except(factors, 0)?;
        // y is n1 × (r2·r3); contract mode 1 with f0.
        let c = factors[0].tr_mul(&y);
        DenseTensor3::fold(&c, 0, [factors[0].ncols(), factors[1].ncols(), factors[2].ncols()])
    }

    /// Selects a sub-tensor by user and item index lists (positions kept).
    pub fn select(&self, users: &[usize], items: &[usize]) -> SparseTensor3 {
        let mut umap = vec![usize::MAX; self.shape[0]];
        for (n, &u) in users.iter().enumerate() {
            umap[u] = n;
        }
        let mut imap = vec![usize::MAX; self.shape[1]];
        for (n, &i) in items.iter().enumerate() {
            imap[i] = n;
        }
        let mut entries: Vec<_> = self
            .entries
            .iter()
            .filter(|([u, i, _], _)| umap[*u] != usize::MAX && imap[*i] != usize::MAX)
            .map(|&([u, i, k], v)| ([umap[u], imap[i], k], v))
            .collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        SparseTensor3 {
            shape: [users.len(), items.len(), self.shape[2]],
            entries,
        }
    }
}

/// The two modes other than `mode`, in increasing order.
pub(crate) fn other_modes(mode: usize) -> (usize, usize) {
    match mode {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

//! Dense order-3 tensors, unfoldings and mode products.
//!
//! Storage is first-index-fastest: entry `(i, j, k)` of an `n1 × n2 × n3`
//! tensor lives at `i + n1·(j + n2·k)`.
//!
//! Unfoldings follow the cyclic convention in which the lower remaining
//! mode varies fastest along the columns:
//!
//! | mode | row | column        |
//! |------|-----|---------------|
//! | 0    | i   | j + n2·k      |
//! | 1    | j   | i + n1·k      |
//! | 2    | k   | i + n1·j      |
//!
//! With this map a Tucker tensor `C ×₁ U₁ ×₂ U₂ ×₃ U₃` satisfies
//! `X₍₀₎ = U₁·C₍₀₎·(U₃ ⊗ U₂)ᵀ`, `X₍₁₎ = U₂·C₍₁₎·(U₃ ⊗ U₁)ᵀ` and
//! `X₍₂₎ = U₃·C₍₂₎·(U₂ ⊗ U₁)ᵀ`.

use super::dense::{ensure_finite, DenseMatrix};
use crate::error::{mismatch, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor3 {
    shape: [usize; 3],
    data: Vec<f64>,
}

pub(crate) fn unfolded_shape(shape: [usize; 3], mode: usize) -> Result<(usize, usize)> {
    let [n1, n2, n3] = shape;
    match mode {
        0 => Ok((n1, n2 * n3)),
        1 => Ok((n2, n1 * n3)),
        2 => Ok((n3, n1 * n2)),
        m => Err(Error::InvalidMode(m)),
    }
}

#[inline]
pub(crate) fn unfold_index(shape: [usize; 3], mode: usize, [i, j, k]: [usize; 3]) -> (usize, usize) {
    let [n1, n2, _] = shape;
    match mode {
        0 => (i, j + n2 * k),
        1 => (j, i + n1 * k),
        _ => (k, i + n1 * j),
    }
}

#[inline]
fn fold_index(shape: [usize; 3], mode: usize, row: usize, col: usize) -> [usize; 3] {
    let [n1, n2, _] = shape;
    match mode {
        0 => [row, col % n2, col / n2],
        1 => [col % n1, row, col / n1],
        _ => [col % n1, col / n1, row],
    }
}

impl DenseTensor3 {
    pub fn zeros(shape: [usize; 3]) -> Self {
        Self {
            shape,
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.iter().product::<usize>() {
            return Err(mismatch(
                "DenseTensor3::from_vec",
                shape.iter().product::<usize>(),
                data.len(),
            ));
        }
        ensure_finite(&data, "tensor")?;
        Ok(Self { shape, data })
    }

    pub fn from_fn(shape: [usize; 3], mut f: impl FnMut([usize; 3]) -> f64) -> Self {
        let mut t = Self::zeros(shape);
        for k in 0..shape[2] {
            for j in 0..shape[1] {
                for i in 0..shape[0] {
                    t.set([i, j, k], f([i, j, k]));
                }
            }
        }
        t
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    /// Values in storage order (first index fastest).
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn offset(&self, [i, j, k]: [usize; 3]) -> usize {
        i + self.shape[0] * (j + self.shape[1] * k)
    }

    #[inline]
    pub fn get(&self, idx: [usize; 3]) -> f64 {
        self.data[self.offset(idx)]
    }

    #[inline]
    pub fn set(&mut self, idx: [usize; 3], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(mismatch(
                "tensor elementwise",
                format!("{:?}", self.shape),
                format!("{:?}", other.shape),
            ));
        }
        Ok(Self {
            shape: self.shape,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn unfold(&self, mode: usize) -> Result<DenseMatrix> {
        let (rows, cols) = unfolded_shape(self.shape, mode)?;
        if mode == 0 {
            // storage order is already the column-major mode-0 unfolding
            return Ok(DenseMatrix::from_column_slice(rows, cols, &self.data));
        }
        let mut out = DenseMatrix::zeros(rows, cols);
        for k in 0..self.shape[2] {
            for j in 0..self.shape[1] {
                for i in 0..self.shape[0] {
                    let (r, c) = unfold_index(self.shape, mode, [i, j, k]);
                    out[(r, c)] = self.get([i, j, k]);
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`DenseTensor3::unfold`].
    pub fn fold(m: &DenseMatrix, mode: usize, shape: [usize; 3]) -> Result<Self> {
        let (rows, cols) = unfolded_shape(shape, mode)?;
        if m.shape() != (rows, cols) {
            return Err(mismatch(
                "fold",
                format!("{rows}×{cols}"),
                format!("{}×{}", m.nrows(), m.ncols()),
            ));
        }
        if mode == 0 {
            return Ok(Self {
                shape,
                data: m.as_slice().to_vec(),
            });
        }
        let mut t = Self::zeros(shape);
        for c in 0..cols {
            for r in 0..rows {
                t.set(fold_index(shape, mode, r, c), m[(r, c)]);
            }
        }
        Ok(t)
    }

    /// `self ×_mode m`, i.e. `unfold(result, mode) = m · unfold(self, mode)`.
    pub fn mode_product(&self, m: &DenseMatrix, mode: usize) -> Result<Self> {
        if mode > 2 {
            return Err(Error::InvalidMode(mode));
        }
        if m.ncols() != self.shape[mode] {
            return Err(mismatch("mode_product", self.shape[mode], m.ncols()));
        }
        let mut shape = self.shape;
        shape[mode] = m.nrows();
        let unfolded = m * self.unfold(mode)?;
        Self::fold(&unfolded, mode, shape)
    }

    /// Block tensor with `self` and `other` on the diagonal of modes 0 and 1
    /// and a shared mode-2 extent; the off-diagonal blocks are zero.
    pub fn block_diag_12(&self, other: &Self) -> Result<Self> {
        if self.shape[2] != other.shape[2] {
            return Err(mismatch("block_diag_12", self.shape[2], other.shape[2]));
        }
        let [a1, a2, n3] = self.shape;
        let [b1, b2, _] = other.shape;
        let mut t = Self::zeros([a1 + b1, a2 + b2, n3]);
        for k in 0..n3 {
            for j in 0..a2 {
                for i in 0..a1 {
                    t.set([i, j, k], self.get([i, j, k]));
                }
            }
            for j in 0..b2 {
                for i in 0..b1 {
                    t.set([a1 + i, a2 + j, k], other.get([i, j, k]));
                }
            }
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::kron;
    use crate::linalg::random::gaussian_matrix;
    use proptest::prelude::*;

    fn counting(shape: [usize; 3]) -> DenseTensor3 {
        let n: usize = shape.iter().product();
        DenseTensor3::from_vec(shape, (1..=n).map(|v| v as f64).collect()).unwrap()
    }

    fn seeded(shape: [usize; 3], seed: u64) -> DenseTensor3 {
        let g = gaussian_matrix(shape[0], shape[1] * shape[2], 1.0, seed);
        DenseTensor3::fold(&g, 0, shape).unwrap()
    }

    #[test]
    fn mode0_unfolding_of_2x2x2_by_hand() {
        // storage: x[i,j,k] = 1 + i + 2j + 4k
        let t = counting([2, 2, 2]);
        assert_eq!(t.get([1, 0, 1]), 6.0);
        // columns ordered (j,k) = (0,0), (1,0), (0,1), (1,1)
        let expected = DenseMatrix::from_row_slice(2, 4, &[1., 3., 5., 7., 2., 4., 6., 8.]);
        assert_eq!(t.unfold(0).unwrap(), expected);
        // mode 1: columns (i,k) = (0,0), (1,0), (0,1), (1,1)
        let expected = DenseMatrix::from_row_slice(2, 4, &[1., 2., 5., 6., 3., 4., 7., 8.]);
        assert_eq!(t.unfold(1).unwrap(), expected);
        // mode 2: columns (i,j)
        let expected = DenseMatrix::from_row_slice(2, 4, &[1., 2., 3., 4., 5., 6., 7., 8.]);
        assert_eq!(t.unfold(2).unwrap(), expected);
    }

    #[test]
    fn rank_one_unfolding_is_outer_with_kron() {
        let a = DenseMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]);
        let b = DenseMatrix::from_column_slice(2, 1, &[3.0, 1.0]);
        let c = DenseMatrix::from_column_slice(4, 1, &[1.0, 2.0, -1.0, 0.25]);
        let t = DenseTensor3::from_fn([3, 2, 4], |[i, j, k]| a[i] * b[j] * c[k]);
        let oracle = &a * kron(&c, &b).transpose();
        assert!((t.unfold(0).unwrap() - oracle).amax() < 1e-15);
    }

    #[test]
    fn tucker_unfolding_identities() {
        let core = seeded([2, 3, 2], 1);
        let u = [
            gaussian_matrix(4, 2, 1.0, 2),
            gaussian_matrix(5, 3, 1.0, 3),
            gaussian_matrix(3, 2, 1.0, 4),
        ];
        let x = core
            .mode_product(&u[0], 0)
            .unwrap()
            .mode_product(&u[1], 1)
            .unwrap()
            .mode_product(&u[2], 2)
            .unwrap();
        let pairs = [(0, &u[2], &u[1]), (1, &u[2], &u[0]), (2, &u[1], &u[0])];
        for (mode, hi, lo) in pairs {
            let rhs = &u[mode] * core.unfold(mode).unwrap() * kron(hi, lo).transpose();
            assert!((x.unfold(mode).unwrap() - rhs).amax() < 1e-12, "mode {mode}");
        }
    }

    #[test]
    fn mode_product_identity_and_commutation() {
        let t = seeded([4, 5, 6], 11);
        let eye = DenseMatrix::identity(5, 5);
        assert_eq!(t.mode_product(&eye, 1).unwrap(), t);
        let a = gaussian_matrix(3, 4, 1.0, 12);
        let b = gaussian_matrix(2, 5, 1.0, 13);
        let ab = t.mode_product(&a, 0).unwrap().mode_product(&b, 1).unwrap();
        let ba = t.mode_product(&b, 1).unwrap().mode_product(&a, 0).unwrap();
        assert!(ab.sub(&ba).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn mode_product_matches_index_oracle() {
        let t = seeded([4, 5, 6], 21);
        let m = gaussian_matrix(3, 4, 1.0, 22);
        let got = t.mode_product(&m, 0).unwrap();
        for i in 0..3 {
            for j in 0..5 {
                for k in 0..6 {
                    let want: f64 = (0..4).map(|p| m[(i, p)] * t.get([p, j, k])).sum();
                    assert!((got.get([i, j, k]) - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mode_product_errors() {
        let t = seeded([2, 3, 4], 5);
        assert!(t.mode_product(&DenseMatrix::zeros(2, 2), 1).is_err());
        assert!(matches!(t.unfold(3), Err(Error::InvalidMode(3))));
    }

    proptest! {
        #[test]
        fn fold_unfold_roundtrip(n1 in 1usize..5, n2 in 1usize..5, n3 in 1usize..5, mode in 0usize..3, seed in 0u64..1000) {
            let t = seeded([n1, n2, n3], seed);
            let back = DenseTensor3::fold(&t.unfold(mode).unwrap(), mode, [n1, n2, n3]).unwrap();
            prop_assert_eq!(back, t);
        }

        #[test]
        fn mode_product_is_associative(mode in 0usize..3, seed in 0u64..1000) {
            let t = seeded([3, 4, 2], seed);
            let n = t.shape()[mode];
            let a = gaussian_matrix(2, 3, 1.0, seed + 1);
            let b = gaussian_matrix(3, n, 1.0, seed + 2);
            let lhs = t.mode_product(&(&a * &b), mode).unwrap();
            let rhs = t.mode_product(&b, mode).unwrap().mode_product(&a, mode).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().frobenius_norm() < 1e-10);
        }
    }
}

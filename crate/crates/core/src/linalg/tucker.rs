//! Tucker decompositions of order-3 tensors: HOSVD, HOOI and Tucker2.

use super::dense::{dense_svd, orthonormality_error, DenseMatrix};
use super::sparse::{SparseMatrix, SparseTensor3};
use super::svd::{complete_basis, leading_left_vectors, truncated_svd, LinearOperator};
use super::tensor::DenseTensor3;
use crate::error::{mismatch, Error, Result};

/// Core tensor plus one factor matrix per mode. Factors have orthonormal
/// columns and the core shape equals the factor column counts.
#[derive(Clone, Debug, PartialEq)]
pub struct TuckerFactors {
    pub core: DenseTensor3,
    pub u: [DenseMatrix; 3],
}

impl TuckerFactors {
    pub fn ranks(&self) -> [usize; 3] {
        self.core.shape()
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.u[0].nrows(), self.u[1].nrows(), self.u[2].nrows()]
    }

    pub fn reconstruct(&self) -> DenseTensor3 {
        self.core
            .mode_product(&self.u[0], 0)
            .and_then(|t| t.mode_product(&self.u[1], 1))
            .and_then(|t| t.mode_product(&self.u[2], 2))
            .expect("factor shapes are consistent with the core")
    }

    pub fn orthonormality_error(&self) -> f64 {
        self.u.iter().map(orthonormality_error).fold(0.0, f64::max)
    }

    /// `‖X − reconstruction‖_F` evaluated without forming the reconstruction:
    /// `‖X‖² − 2⟨X, X̂⟩ + ‖C‖²`, exact for orthonormal factors.
    pub fn fit_error(&self, x: &dyn TensorSource) -> Result<f64> {
        let projected = x.project_all([&self.u[0], &self.u[1], &self.u[2]])?;
        let inner: f64 = projected
            .data()
            .iter()
            .zip(self.core.data())
            .map(|(a, b)| a * b)
            .sum();
        let c2 = self.core.frobenius_norm().powi(2);
        Ok((x.norm_sq() - 2.0 * inner + c2).max(0.0).sqrt())
    }
}

/// Read access to an order-3 tensor for the decomposition routines.
pub trait TensorSource {
    fn shape(&self) -> [usize; 3];
    fn norm_sq(&self) -> f64;
    /// Unfolding along `skip` of the tensor contracted with `fₖᵀ` on the
    /// other two modes.
    fn project_except(&self, factors: [&DenseMatrix; 3], skip: usize) -> Result<DenseMatrix>;
    fn project_all(&self, factors: [&DenseMatrix; 3]) -> Result<DenseTensor3>;
    fn unfolding(&self, mode: usize) -> Result<Box<dyn LinearOperator>>;
}

impl TensorSource for DenseTensor3 {
    fn shape(&self) -> [usize; 3] {
        DenseTensor3::shape(self)
    }
    fn norm_sq(&self) -> f64 {
        self.data().iter().map(|v| v * v).sum()
    }
    fn project_except(&self, factors: [&DenseMatrix; 3], skip: usize) -> Result<DenseMatrix> {
        if skip > 2 {
            return Err(Error::InvalidMode(skip));
        }
        let mut t = self.clone();
        for (k, f) in factors.iter().enumerate() {
            if k != skip {
                t = t.mode_product(&f.transpose(), k)?;
            }
        }
        t.unfold(skip)
    }
    fn project_all(&self, factors: [&DenseMatrix; 3]) -> Result<DenseTensor3> {
        self.mode_product(&factors[0].transpose(), 0)?
            .mode_product(&factors[1].transpose(), 1)?
            .mode_product(&factors[2].transpose(), 2)
    }
    fn unfolding(&self, mode: usize) -> Result<Box<dyn LinearOperator>> {
        Ok(Box::new(self.unfold(mode)?))
    }
}

impl TensorSource for SparseTensor3 {
    fn shape(&self) -> [usize; 3] {
        SparseTensor3::shape(self)
    }
    fn norm_sq(&self) -> f64 {
        self.entries().iter().map(|(_, v)| v * v).sum()
    }
    fn project_except(&self, factors: [&DenseMatrix; 3], skip: usize) -> Result<DenseMatrix> {
        SparseTensor3::project_except(self, factors, skip)
    }
    fn project_all(&self, factors: [&DenseMatrix; 3]) -> Result<DenseTensor3> {
        SparseTensor3::project_all(self, factors)
    }
    fn unfolding(&self, mode: usize) -> Result<Box<dyn LinearOperator>> {
        let m: SparseMatrix = self.unfold(mode)?;
        Ok(Box::new(m))
    }
}

fn check_ranks(op: &'static str, shape: [usize; 3], ranks: [usize; 3]) -> Result<()> {
    for (r, n) in ranks.iter().zip(shape) {
        if *r > n {
            return Err(Error::RankTooLarge { op, rank: *r, max: n });
        }
        if *r == 0 {
            return Err(Error::InvalidParameter(format!("{op}: zero rank")));
        }
    }
    Ok(())
}

/// Leading `r` left singular vectors of the mode-`mode` unfolding. Ranks
/// above the unfolding's column count are completed with an orthonormal
/// basis of the remainder.
fn unfolding_factor(t: &dyn TensorSource, mode: usize, r: usize, seed: u64) -> Result<DenseMatrix> {
    let op = t.unfolding(mode)?;
    let k = r.min(op.cols());
    let u = truncated_svd(op.as_ref(), k, seed)?.u;
    if k < r {
        complete_basis(&u, r)
    } else {
        Ok(u)
    }
}

/// Truncated higher-order SVD: each factor holds the leading left singular
/// vectors of the corresponding unfolding and the core is the projection of
/// `t` onto them.
pub fn hosvd(t: &dyn TensorSource, ranks: [usize; 3], seed: u64) -> Result<TuckerFactors> {
    check_ranks("hosvd", t.shape(), ranks)?;
    let u = [
        unfolding_factor(t, 0, ranks[0], seed)?,
        unfolding_factor(t, 1, ranks[1], seed.wrapping_add(1))?,
        unfolding_factor(t, 2, ranks[2], seed.wrapping_add(2))?,
    ];
    let core = t.project_all([&u[0], &u[1], &u[2]])?;
    Ok(TuckerFactors { core, u })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HooiOptions {
    pub max_iters: usize,
    /// Sweeps stop once `(err_prev − err) / ‖X‖` drops below this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for HooiOptions {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct HooiReport {
    pub sweeps: usize,
    /// Fit error before the first sweep followed by one value per sweep.
    pub errors: Vec<f64>,
    pub converged: bool,
}

/// Higher-order orthogonal iteration. Starts from `init` when given (warm
/// start), otherwise from the HOSVD of `t`.
pub fn hooi(
    t: &dyn TensorSource,
    ranks: [usize; 3],
    init: Option<&TuckerFactors>,
    opts: HooiOptions,
) -> Result<(TuckerFactors, HooiReport)> {
    check_ranks("hooi", t.shape(), ranks)?;
    if opts.max_iters == 0 {
        return Err(Error::InvalidParameter("hooi: max_iters must be >= 1".into()));
    }
    let start = match init {
        Some(f) => {
            if f.shape() != t.shape() || f.ranks() != ranks {
                return Err(mismatch(
                    "hooi warm start",
                    format!("shape {:?} ranks {:?}", t.shape(), ranks),
                    format!("shape {:?} ranks {:?}", f.shape(), f.ranks()),
                ));
            }
            f.clone()
        }
        None => hosvd(t, ranks, opts.seed)?,
    };
    alternate(t, start, [true, true, true], opts)
}

/// Tucker2: compresses modes 0 and 1, leaves mode 2 at full extent.
/// Returns `(u, v, core)` with `t ≈ core ×₁ u ×₂ v`.
pub fn tucker2(
    t: &dyn TensorSource,
    ranks: [usize; 2],
    opts: HooiOptions,
) -> Result<(DenseMatrix, DenseMatrix, DenseTensor3)> {
    let shape = t.shape();
    check_ranks("tucker2", shape, [ranks[0], ranks[1], shape[2].max(1)])?;
    let eye = DenseMatrix::identity(shape[2], shape[2]);
    let u0 = unfolding_factor(t, 0, ranks[0], opts.seed)?;
    let u1 = unfolding_factor(t, 1, ranks[1], opts.seed.wrapping_add(1))?;
    let core = t.project_all([&u0, &u1, &eye])?;
    let start = TuckerFactors {
        core,
        u: [u0, u1, eye],
    };
    let (f, _) = alternate(t, start, [true, true, false], opts)?;
    let [u, v, _] = f.u;
    Ok((u, v, f.core))
}

fn alternate(
    t: &dyn TensorSource,
    mut f: TuckerFactors,
    active: [bool; 3],
    opts: HooiOptions,
) -> Result<(TuckerFactors, HooiReport)> {
    let norm_x2 = t.norm_sq();
    let norm_x = norm_x2.sqrt();
    let ranks = f.ranks();
    let err_of = |core: &DenseTensor3| (norm_x2 - core.frobenius_norm().powi(2)).max(0.0).sqrt();
    let mut report = HooiReport {
        errors: vec![err_of(&f.core)],
        ..Default::default()
    };
    let last = (0..3).rev().find(|&m| active[m]).unwrap_or(0);
    for _ in 0..opts.max_iters {
        let mut last_y = None;
        for mode in 0..3 {
            if !active[mode] {
                continue;
            }
            let y = t.project_except([&f.u[0], &f.u[1], &f.u[2]], mode)?;
            f.u[mode] = leading_left_vectors(&y, ranks[mode])?;
            if mode == last {
                last_y = Some(y);
            }
        }
        let y = last_y.expect("at least one active mode");
        let core_unfolded = f.u[last].tr_mul(&y);
        f.core = DenseTensor3::fold(&core_unfolded, last, ranks)?;
        let err = err_of(&f.core);
        let prev = *report.errors.last().expect("seeded with the initial error");
        report.errors.push(err);
        report.sweeps += 1;
        let improvement = if norm_x > 0.0 { (prev - err) / norm_x } else { 0.0 };
        if improvement < opts.tol {
            report.converged = true;
            break;
        }
    }
    Ok((f, report))
}

/// Dense singular values of every unfolding, used for HOSVD error bounds.
pub fn unfolding_spectra(t: &DenseTensor3) -> Result<[Vec<f64>; 3]> {
    let s = |m| -> Result<Vec<f64>> { Ok(dense_svd(&t.unfold(m)?)?.s.iter().copied().collect()) };
    Ok([s(0)?, s(1)?, s(2)?])
}

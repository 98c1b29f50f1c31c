//! Seeded random helpers. Every stochastic kernel in the crate draws from a
//! ChaCha8 stream so identical seeds give bit-identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dense::DenseMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `rows × cols` matrix with i.i.d. `N(0, sigma²)` entries, filled column by column.
pub fn gaussian_matrix(rows: usize, cols: usize, sigma: f64, seed: u64) -> DenseMatrix {
    let mut r = rng(seed);
    gaussian_matrix_from(rows, cols, sigma, &mut r)
}

pub fn gaussian_matrix_from(
    rows: usize,
    cols: usize,
    sigma: f64,
    rng: &mut impl rand::Rng,
) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        sigma * z
    })
}

/// Random matrix with orthonormal columns.
pub fn orthonormal_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let g = gaussian_matrix(rows, cols, 1.0, seed);
    super::dense::thin_qr(&g).expect("gaussian matrix is finite").0
}

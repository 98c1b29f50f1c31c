//! Deterministic dense and sparse kernels the models are built on.

pub mod dense;
pub mod random;
pub mod sparse;
pub mod svd;
pub mod tensor;
pub mod tucker;

pub use dense::{
    pad_rows,
    block_diag, dense_svd, from_row_major, kron, orthonormality_error, thin_qr, to_row_major,
    DenseMatrix, Svd,
};
pub use sparse::{SparseCoo, SparseMatrix, SparseTensor3};
pub use svd::{leading_left_vectors, truncated_svd, LinearOperator};
pub use tensor::DenseTensor3;
pub use tucker::{hooi, hosvd, tucker2, HooiOptions, HooiReport, TensorSource, TuckerFactors};

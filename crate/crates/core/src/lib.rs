pub mod baselines;
pub mod cli;
pub mod error;
pub mod eval_harness;
pub mod ids;
pub mod io;
pub mod linalg;
pub mod psirec;
pub mod ranking;
pub mod seq_tensor;
pub mod tirec;

pub use error::{Error, Result};

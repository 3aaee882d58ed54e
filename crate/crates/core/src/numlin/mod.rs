//! Dense numerical linear algebra: tensors, covariance estimation and
//! symmetric eigendecomposition.
//!
//! Everything here is a pure function on immutable inputs; the analysis
//! path always runs in 64-bit precision regardless of training precision.

mod covariance;
mod eig;
mod gemm;
mod tensor;

pub use covariance::{covariance, CovarianceMatrix};
pub use eig::{sym_eig, sym_eig_full, JACOBI_SWEEP_BUDGET};
pub use gemm::{matmul_nn, matmul_nt, matmul_tn, transpose};
pub use tensor::{Real, Tensor};

use thiserror::Error;

/// Errors from tensor construction and the linear-algebra kernels.
#[derive(Debug, Error)]
pub enum NumlinError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("eigensolver failed to converge within {sweeps} sweeps (off-diagonal norm {offdiag:.3e})")]
    ConvergenceFailure { sweeps: usize, offdiag: f64 },
}

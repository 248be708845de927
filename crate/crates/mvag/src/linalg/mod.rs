//! Sparse symmetric matrix kernels and an iterative eigensolver for the
//! bottom end of the spectrum of aggregated Laplacians.

pub mod eigen;
pub mod sparse;

pub use eigen::{smallest_eigenvalues, smallest_eigenvectors, SpectrumSlice};
pub use sparse::{aggregate, SparseSymMatrix};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix entry ({row},{col}) has no symmetric counterpart")]
    Asymmetric { row: usize, col: usize },

    #[error("duplicate entry at ({row},{col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("eigensolver did not converge after {iterations} matvecs (worst residual {worst_residual:.3e})")]
    NoConvergence {
        iterations: usize,
        worst_residual: f64,
    },

    #[error("requested {requested} eigenpairs from a {n}x{n} matrix")]
    BadEigenCount { requested: usize, n: usize },
}

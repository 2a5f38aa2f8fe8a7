//! Dense symmetric eigendecomposition, adjacency spectral embedding and
//! Procrustes comparison of embeddings.

mod eigen;
mod embed;
mod procrustes;

pub use eigen::{top_d_eigen, EigenPairs};
pub use embed::{ase, Embedding};
pub use procrustes::{frobenius_distance, procrustes_align, AlignmentResult};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: entries ({row}, {col}) and ({col}, {row}) differ by {gap:e}")]
    Asymmetric { row: usize, col: usize, gap: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension d = {d} out of range 1..={n}")]
    Dimension { d: usize, n: usize },
    #[error("eigensolver did not converge ({detail}); residual {residual:e}")]
    NoConvergence { detail: String, residual: f64 },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
}

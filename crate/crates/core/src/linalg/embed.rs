use ndarray::{Array2, ArrayBase, Data, Ix2};

use super::{top_d_eigen, LinalgError};
use crate::scalar::Scalar;

/// Estimated latent positions, one row per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T> {
    positions: Array2<T>,
}

impl<T: Scalar> Embedding<T> {
    /// Wraps an `n x d` position matrix; entries must be finite and `d <= n`.
    pub fn from_positions(positions: Array2<T>) -> Result<Self, LinalgError> {
        let (n, d) = positions.dim();
        if d > n {
            return Err(LinalgError::Dimension { d, n });
        }
        if let Some(((row, col), _)) = positions.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(LinalgError::NonFinite { row, col });
        }
        Ok(Embedding { positions })
    }

    pub fn positions(&self) -> &Array2<T> {
        &self.positions
    }

    pub fn into_positions(self) -> Array2<T> {
        self.positions
    }

    pub fn n(&self) -> usize {
        self.positions.nrows()
    }

    pub fn dim(&self) -> usize {
        self.positions.ncols()
    }
}

/// Adjacency spectral embedding: `U |S|^{1/2}` from the top-`d` eigenpairs
/// by magnitude.
///
/// Eigenvalues may be negative once a matrix has been perturbed; columns
/// are scaled by the square root of each eigenvalue's magnitude so positions
/// stay real.
pub fn ase<T, S>(m: &ArrayBase<S, Ix2>, d: usize) -> Result<Embedding<T>, LinalgError>
where
    T: Scalar,
    S: Data<Elem = T>,
{
    let (values, mut positions) = top_d_eigen(m, d)?.into_parts();
    for (mut col, &lambda) in positions.columns_mut().into_iter().zip(values.iter()) {
        let scale = lambda.abs().sqrt();
        col.mapv_inplace(|v| v * scale);
    }
    Embedding::from_positions(positions)
}

//! Differentially private adjacency spectral embedding.
//!
//! The mechanism perturbs the adjacency matrix with symmetric Gaussian noise
//! whose per-entry variance is
//!
//! ```text
//! beta^2 = 8 d^2 ln^2(d / delta) / (n^2 alpha^2)
//! ```
//!
//! and embeds the perturbed matrix `A + E` with [`ase`]. The upper triangle
//! of `E`, diagonal included, is drawn i.i.d. `N(0, beta^2)` and mirrored, so
//! every entry keeps variance `beta^2`. The diagonal is perturbed and the
//! result is neither hollowed nor clipped.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::AdjacencyMatrix;
use crate::linalg::{ase, Embedding, LinalgError};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum DpError {
    #[error("invalid privacy budget: {0}")]
    Budget(String),
    #[error("noise calibration failed: {0}")]
    Calibration(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// An `(alpha, delta)` privacy budget with `alpha > 0` and `0 < delta < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    alpha: f64,
    delta: f64,
}

impl PrivacyBudget {
    pub fn new(alpha: f64, delta: f64) -> Result<Self, DpError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(DpError::Budget(format!(
                "alpha = {alpha} must be a positive finite number"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(DpError::Budget(format!("delta = {delta} must lie in (0, 1)")));
        }
        Ok(PrivacyBudget { alpha, delta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Per-entry Gaussian variance for an `n`-vertex, `d`-dimensional release.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseScale {
    beta_sq: f64,
    n: usize,
    d: usize,
}

impl NoiseScale {
    /// A scale with an explicit variance, bypassing calibration.
    pub fn with_variance(beta_sq: f64, n: usize, d: usize) -> Result<Self, DpError> {
        if !(beta_sq.is_finite() && beta_sq > 0.0) {
            return Err(DpError::Calibration(format!(
                "variance {beta_sq} must be positive and finite"
            )));
        }
        Ok(NoiseScale { beta_sq, n, d })
    }

    pub fn beta_sq(&self) -> f64 {
        self.beta_sq
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }
}

/// `beta^2 = 8 d^2 ln^2(d/delta) / (n^2 alpha^2)`, natural logarithm.
pub fn calibrate_noise(n: usize, d: usize, budget: &PrivacyBudget) -> Result<NoiseScale, DpError> {
    if n == 0 {
        return Err(DpError::Calibration("n must be at least 1".into()));
    }
    if d == 0 || d > n {
        return Err(DpError::Calibration(format!("d = {d} out of range 1..={n}")));
    }
    let ratio = d as f64 / budget.delta;
    if ratio <= 1.0 {
        return Err(DpError::Calibration(format!(
            "d / delta = {ratio} must exceed 1 for a positive log term"
        )));
    }
    let log = ratio.ln();
    let (nf, df) = (n as f64, d as f64);
    let beta_sq = 8.0 * df * df * log * log / (nf * nf * budget.alpha * budget.alpha);
    NoiseScale::with_variance(beta_sq, n, d)
}

/// Symmetric Gaussian noise matrix `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMatrix<T> {
    entries: Array2<T>,
}

impl<T: Scalar> NoiseMatrix<T> {
    pub fn entries(&self) -> &Array2<T> {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Upper-triangle entries, diagonal included, in the order they were drawn.
    pub fn upper_triangle(&self) -> Vec<T> {
        let n = self.n();
        (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .map(|(i, j)| self.entries[[i, j]])
            .collect()
    }
}

/// Draws the upper triangle of an `n x n` matrix (row-major, diagonal
/// included) from `N(0, beta^2)` and mirrors it.
///
/// Draws are made in `f64` and then converted, so a seed yields the same
/// noise pattern for every scalar type.
pub fn sample_symmetric_noise<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    scale: &NoiseScale,
    rng: &mut R,
) -> Result<NoiseMatrix<T>, DpError> {
    let normal = Normal::new(0.0, scale.beta_sq.sqrt()).map_err(|e| DpError::Calibration(e.to_string()))?;
    let mut entries = Array2::<T>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = T::lit(normal.sample(rng));
            entries[[i, j]] = v;
            entries[[j, i]] = v;
        }
    }
    Ok(NoiseMatrix { entries })
}

/// `A + E`.
pub fn perturb<T: Scalar>(adjacency: &AdjacencyMatrix, noise: &NoiseMatrix<T>) -> Result<Array2<T>, DpError> {
    if adjacency.n() != noise.n() {
        return Err(LinalgError::ShapeMismatch {
            left: adjacency.entries().dim(),
            right: noise.entries.dim(),
        }
        .into());
    }
    let mut out = noise.entries.clone();
    for ((i, j), &a) in adjacency.entries().indexed_iter() {
        if a == 1 {
            out[[i, j]] += T::one();
        }
    }
    Ok(out)
}

/// Differentially private embedding of `adjacency` into `d` dimensions.
pub fn dp_ase<T: Scalar, R: Rng + ?Sized>(
    adjacency: &AdjacencyMatrix,
    d: usize,
    budget: &PrivacyBudget,
    rng: &mut R,
) -> Result<Embedding<T>, DpError> {
    let n = adjacency.n();
    if d == 0 || d > n {
        return Err(LinalgError::Dimension { d, n }.into());
    }
    let scale = calibrate_noise(n, d, budget)?;
    let noise = sample_symmetric_noise::<T, R>(n, &scale, rng)?;
    let perturbed = perturb(adjacency, &noise)?;
    Ok(ase(&perturbed, d)?)
}

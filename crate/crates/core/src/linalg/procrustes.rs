//! Orthogonal Procrustes alignment.
//!
//! Embeddings are identifiable only up to an orthogonal transform, so any
//! comparison between two of them goes through the rotation
//! `Q = argmin ||X Q - Y||_F`, which is `U V^T` for the singular value
//! decomposition `X^T Y = U S V^T`.

use ndarray::{Array2, ArrayBase, Data, Ix2};

use super::LinalgError;
use crate::scalar::Scalar;

const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult<T> {
    rotation: Array2<T>,
    aligned_distance: T,
}

impl<T: Scalar> AlignmentResult<T> {
    /// Orthogonal `d x d` matrix applied on the right of `X`.
    pub fn rotation(&self) -> &Array2<T> {
        &self.rotation
    }

    /// `||X Q - Y||_F`.
    pub fn aligned_distance(&self) -> T {
        self.aligned_distance
    }
}

fn check_shapes<T, S1, S2>(x: &ArrayBase<S1, Ix2>, y: &ArrayBase<S2, Ix2>) -> Result<(), LinalgError>
where
    S1: Data<Elem = T>,
    S2: Data<Elem = T>,
{
    if x.dim() != y.dim() {
        return Err(LinalgError::ShapeMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    Ok(())
}

/// `||X - Y||_F`.
pub fn frobenius_distance<T, S1, S2>(x: &ArrayBase<S1, Ix2>, y: &ArrayBase<S2, Ix2>) -> Result<T, LinalgError>
where
    T: Scalar,
    S1: Data<Elem = T>,
    S2: Data<Elem = T>,
{
    check_shapes(x, y)?;
    Ok(x.iter()
        .zip(y.iter())
        .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
        .sqrt())
}

/// Finds the orthogonal `Q` minimising `||X Q - Y||_F`.
pub fn procrustes_align<T, S1, S2>(
    x: &ArrayBase<S1, Ix2>,
    y: &ArrayBase<S2, Ix2>,
) -> Result<AlignmentResult<T>, LinalgError>
where
    T: Scalar,
    S1: Data<Elem = T>,
    S2: Data<Elem = T>,
{
    check_shapes(x, y)?;
    let cross = x.t().dot(y);
    let (u, v) = svd_factors(cross);
    let rotation = u.dot(&v.t());
    let aligned_distance = frobenius_distance(&x.dot(&rotation), y)?;
    Ok(AlignmentResult {
        rotation,
        aligned_distance,
    })
}

/// Orthogonal factors `U, V` of a square matrix `M = U S V^T`, by one-sided
/// Jacobi rotations. Left singular vectors of (numerically) zero singular
/// values are completed to an orthonormal basis.
fn svd_factors<T: Scalar>(m: Array2<T>) -> (Array2<T>, Array2<T>) {
    let d = m.nrows();
    let mut w = m;
    let mut v = Array2::<T>::eye(d);
    let eps = T::epsilon();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..d {
            for q in (p + 1)..d {
                let (mut a, mut b, mut g) = (T::zero(), T::zero(), T::zero());
                for i in 0..d {
                    a += w[[i, p]] * w[[i, p]];
                    b += w[[i, q]] * w[[i, q]];
                    g += w[[i, p]] * w[[i, q]];
                }
                if g == T::zero() || g.abs() <= eps * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (T::lit(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..d {
                        let (xp, xq) = (mat[[i, p]], mat[[i, q]]);
                        mat[[i, p]] = c * xp - s * xq;
                        mat[[i, q]] = s * xp + c * xq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<T> = (0..d)
        .map(|j| w.column(j).iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt())
        .collect();
    let largest = norms.iter().copied().fold(T::zero(), T::max);
    let cutoff = T::from_len(d) * eps * largest;

    let mut u = Array2::<T>::zeros((d, d));
    let mut missing = Vec::new();
    for j in 0..d {
        if norms[j] > cutoff && norms[j] > T::zero() {
            for i in 0..d {
                u[[i, j]] = w[[i, j]] / norms[j];
            }
        } else {
            missing.push(j);
        }
    }
    if !missing.is_empty() {
        let mut filled: Vec<usize> = (0..d).filter(|j| !missing.contains(j)).collect();
        let mut candidate = 0;
        for j in missing {
            while candidate < d {
                let mut e = ndarray::Array1::<T>::zeros(d);
                e[candidate] = T::one();
                candidate += 1;
                // Twice for numerical orthogonality.
                for _ in 0..2 {
                    for &k in &filled {
                        let proj = e.dot(&u.column(k));
                        e.scaled_add(-proj, &u.column(k));
                    }
                }
                let norm = e.dot(&e).sqrt();
                if norm > T::lit(0.5) {
                    u.column_mut(j).assign(&(e / norm));
                    filled.push(j);
                    break;
                }
            }
        }
    }
    (u, v)
}

//! Symmetric eigensolver.
//!
//! The matrix is reduced to tridiagonal form with Householder reflections and
//! the full spectrum of the tridiagonal matrix is found with the implicit QL
//! algorithm (Wilkinson shifts). Eigenvectors are then obtained one of two
//! ways:
//!
//! * `Strategy::Full` accumulates every QL rotation into the explicit
//!   Householder basis, producing all `n` eigenvectors in `O(n^3)`.
//! * `Strategy::Selected` computes only the requested eigenvectors by inverse
//!   iteration on the tridiagonal matrix, reorthogonalising within clusters of
//!   close eigenvalues, and maps them back through the reflectors. This costs
//!   `O(n^2 d)` on top of the reduction and is what makes `d << n` embeddings
//!   of graphs with thousands of vertices affordable.
//!
//! Whichever path runs, eigenvalues are ordered by descending magnitude,
//! positive before negative at equal magnitude, then by ascending position in
//! the sorted spectrum.

use std::cmp::Ordering;

use ndarray::{Array1, Array2, ArrayBase, Data, Ix2};

use super::LinalgError;
use crate::scalar::Scalar;

const SYMMETRY_TOLERANCE: f64 = 1e-12;
const QL_MAX_ITERATIONS: usize = 60;
const INVERSE_MAX_ITERATIONS: usize = 5;
const INVERSE_EXTRA_ITERATIONS: usize = 2;

/// The `d` eigenpairs of largest magnitude: `values[j]` pairs with column `j`
/// of `vectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs<T> {
    values: Array1<T>,
    vectors: Array2<T>,
}

impl<T: Scalar> EigenPairs<T> {
    pub fn values(&self) -> &Array1<T> {
        &self.values
    }

    /// `n x d`, unit-norm columns.
    pub fn vectors(&self) -> &Array2<T> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn into_parts(self) -> (Array1<T>, Array2<T>) {
        (self.values, self.vectors)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Strategy {
    Full,
    Selected,
}

impl Strategy {
    fn for_problem(n: usize, d: usize) -> Self {
        if n <= 64 || 4 * d >= n {
            Strategy::Full
        } else {
            Strategy::Selected
        }
    }
}

/// Computes the `d` eigenpairs of the symmetric matrix `m` with largest
/// absolute eigenvalue.
pub fn top_d_eigen<T, S>(m: &ArrayBase<S, Ix2>, d: usize) -> Result<EigenPairs<T>, LinalgError>
where
    T: Scalar,
    S: Data<Elem = T>,
{
    let n = m.nrows();
    top_d_eigen_with(m, d, Strategy::for_problem(n, d))
}

pub(crate) fn top_d_eigen_with<T, S>(
    m: &ArrayBase<S, Ix2>,
    d: usize,
    strategy: Strategy,
) -> Result<EigenPairs<T>, LinalgError>
where
    T: Scalar,
    S: Data<Elem = T>,
{
    let fro = check_symmetric(m)?;
    let n = m.nrows();
    if d == 0 || d > n {
        return Err(LinalgError::Dimension { d, n });
    }

    let tri = Tridiagonal::reduce(m.iter().copied().collect(), n);
    match strategy {
        Strategy::Full => full_decomposition(tri, d),
        Strategy::Selected => {
            let pairs = selected_decomposition(tri, d)?;
            verify_residuals(m, &pairs, fro)?;
            Ok(pairs)
        }
    }
}

/// Returns the Frobenius norm after validating shape, finiteness and symmetry.
fn check_symmetric<T, S>(m: &ArrayBase<S, Ix2>) -> Result<T, LinalgError>
where
    T: Scalar,
    S: Data<Elem = T>,
{
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    let mut max_abs = T::zero();
    let mut sum_sq = T::zero();
    for ((row, col), &v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(LinalgError::NonFinite { row, col });
        }
        max_abs = max_abs.max(v.abs());
        sum_sq += v * v;
    }
    let tol = T::lit(SYMMETRY_TOLERANCE).max(T::lit(4.0) * T::epsilon()) * max_abs.max(T::one());
    for row in 0..rows {
        for col in (row + 1)..cols {
            let gap = (m[[row, col]] - m[[col, row]]).abs();
            if gap > tol {
                return Err(LinalgError::Asymmetric {
                    row,
                    col,
                    gap: gap.as_f64(),
                });
            }
        }
    }
    Ok(sum_sq.sqrt())
}

/// Residual bound `max(1e-8, 1e4 eps) * max(1, ||M||_F)`; for `f64` this is
/// the `1e-8` relative bound, `f32` gets a bound proportional to its epsilon.
pub(crate) fn residual_tolerance<T: Scalar>(fro: T) -> T {
    T::lit(1e-8).max(T::lit(1e4) * T::epsilon()) * fro.max(T::one())
}

fn verify_residuals<T, S>(m: &ArrayBase<S, Ix2>, pairs: &EigenPairs<T>, fro: T) -> Result<(), LinalgError>
where
    T: Scalar,
    S: Data<Elem = T>,
{
    let tol = residual_tolerance(fro);
    for (j, col) in pairs.vectors.columns().into_iter().enumerate() {
        let lambda = pairs.values[j];
        let mv = m.dot(&col);
        let residual = mv
            .iter()
            .zip(col.iter())
            .fold(T::zero(), |acc, (&a, &b)| acc + (a - lambda * b) * (a - lambda * b))
            .sqrt();
        if residual.is_nan() || residual > tol {
            return Err(LinalgError::NoConvergence {
                detail: format!("inverse iteration for eigenvalue {lambda:e}"),
                residual: residual.as_f64(),
            });
        }
    }
    Ok(())
}

/// Householder reduction `A = Q T Q^T`, keeping the reflectors.
///
/// Reflector `k` is `H_k = I - tau_k v_k v_k^T` acting on indices `k+1..n`;
/// `v_k` is stored in row `k` of `work`, columns `k+1..n`, and
/// `Q = H_0 H_1 ... H_{n-3}`.
struct Tridiagonal<T> {
    n: usize,
    diag: Vec<T>,
    /// `off[i]` couples `i` and `i + 1`; one slot longer than needed so QL can
    /// use it as workspace.
    off: Vec<T>,
    taus: Vec<T>,
    work: Vec<T>,
}

impl<T: Scalar> Tridiagonal<T> {
    fn reduce(mut a: Vec<T>, n: usize) -> Self {
        let mut diag = vec![T::zero(); n];
        let mut off = vec![T::zero(); n];
        let mut taus = vec![T::zero(); n];
        let mut v = vec![T::zero(); n];
        let mut w = vec![T::zero(); n];

        for k in 0..n.saturating_sub(2) {
            let m = n - k - 1;
            diag[k] = a[k * n + k];
            let head = a[k * n + k + 1];
            let tail_sq = dot(&a[k * n + k + 2..(k + 1) * n], &a[k * n + k + 2..(k + 1) * n]);
            if tail_sq == T::zero() {
                // Column already reduced.
                off[k] = head;
                a[k * n + k + 1..(k + 1) * n].fill(T::zero());
                continue;
            }
            let alpha = (head * head + tail_sq).sqrt();
            let sign = if head >= T::zero() { T::one() } else { -T::one() };
            let v0 = head + sign * alpha;
            let tau = T::lit(2.0) / (v0 * v0 + tail_sq);
            off[k] = -sign * alpha;
            taus[k] = tau;
            a[k * n + k + 1] = v0;

            let v = &mut v[..m];
            v.copy_from_slice(&a[k * n + k + 1..(k + 1) * n]);

            // p = tau * A22 v ; w = p - (tau/2)(p.v) v
            let w = &mut w[..m];
            for (i, wi) in w.iter_mut().enumerate() {
                let start = (k + 1 + i) * n + k + 1;
                *wi = tau * dot(&a[start..start + m], v);
            }
            let half = T::lit(0.5) * tau * dot(w, v);
            for (wi, &vi) in w.iter_mut().zip(v.iter()) {
                *wi -= half * vi;
            }
            // A22 -= v w^T + w v^T
            for i in 0..m {
                let (vi, wi) = (v[i], w[i]);
                let start = (k + 1 + i) * n + k + 1;
                for ((aij, &vj), &wj) in a[start..start + m].iter_mut().zip(v.iter()).zip(w.iter()) {
                    *aij -= vi * wj + wi * vj;
                }
            }
        }
        if n >= 2 {
            diag[n - 2] = a[(n - 2) * n + n - 2];
            off[n - 2] = a[(n - 1) * n + n - 2];
        }
        if n >= 1 {
            diag[n - 1] = a[(n - 1) * n + n - 1];
        }
        Tridiagonal {
            n,
            diag,
            off,
            taus,
            work: a,
        }
    }

    fn reflector(&self, k: usize) -> (&[T], T) {
        let n = self.n;
        (&self.work[k * n + k + 1..(k + 1) * n], self.taus[k])
    }

    /// `y <- Q y`.
    fn apply_q(&self, y: &mut [T]) {
        for k in (0..self.n.saturating_sub(2)).rev() {
            let (v, tau) = self.reflector(k);
            if tau == T::zero() {
                continue;
            }
            let tail = &mut y[k + 1..];
            let s = tau * dot(v, tail);
            for (yi, &vi) in tail.iter_mut().zip(v) {
                *yi -= s * vi;
            }
        }
    }

    /// Explicit `Q^T`, row-major.
    fn q_transpose(&self) -> Vec<T> {
        let n = self.n;
        let mut qt = vec![T::zero(); n * n];
        for i in 0..n {
            qt[i * n + i] = T::one();
        }
        let mut u = vec![T::zero(); n];
        for k in 0..n.saturating_sub(2) {
            let (v, tau) = self.reflector(k);
            if tau == T::zero() {
                continue;
            }
            u.fill(T::zero());
            for (i, &vi) in v.iter().enumerate() {
                let row = &qt[(k + 1 + i) * n..(k + 2 + i) * n];
                for (uj, &r) in u.iter_mut().zip(row) {
                    *uj += vi * r;
                }
            }
            for (i, &vi) in v.iter().enumerate() {
                let s = tau * vi;
                let row = &mut qt[(k + 1 + i) * n..(k + 2 + i) * n];
                for (r, &uj) in row.iter_mut().zip(u.iter()) {
                    *r -= s * uj;
                }
            }
        }
        qt
    }

    /// `eps` times the infinity norm of the tridiagonal matrix.
    fn deflation_floor(&self) -> T {
        let n = self.n;
        let mut norm = T::zero();
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { T::zero() };
            let right = if i + 1 < n { self.off[i].abs() } else { T::zero() };
            norm = norm.max(left + self.diag[i].abs() + right);
        }
        T::epsilon() * norm
    }

    fn negligible(&self, i: usize, floor: T) -> bool {
        negligible(self.off[i], self.diag[i], self.diag[i + 1], floor)
    }
}

/// Couplings at or below `floor` (an absolute bound scaled to the whole
/// matrix) are dropped too, so clusters of near-zero eigenvalues deflate.
fn negligible<T: Scalar>(e: T, d0: T, d1: T, floor: T) -> bool {
    e.abs() <= T::epsilon() * (d0.abs() + d1.abs()) || e.abs() <= floor || e.abs() < T::min_positive_value()
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Implicit QL with Wilkinson shifts on the tridiagonal `(d, e)`, where
/// `e[i]` couples `i` and `i + 1` and `e.len() == d.len()`.
///
/// When `zt` is given (row-major, `d.len()` rows of `width` entries) each
/// plane rotation is applied to rows `i, i + 1`, so rows end up as
/// eigenvectors.
fn ql_implicit<T: Scalar>(
    d: &mut [T],
    e: &mut [T],
    floor: T,
    mut zt: Option<(&mut [T], usize)>,
) -> Result<(), LinalgError> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = T::zero();
    let two = T::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n && !negligible(e[m], d[m], d[m + 1], floor) {
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITERATIONS {
                return Err(LinalgError::NoConvergence {
                    detail: format!("QL iteration on eigenvalue {l}"),
                    residual: e[l].abs().as_f64(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + r.abs() * g.signum());
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some((z, width)) = zt.as_mut() {
                    let width = *width;
                    let (lo, hi) = z.split_at_mut((i + 1) * width);
                    let row_i = &mut lo[i * width..];
                    let row_next = &mut hi[..width];
                    for (zi, zn) in row_i.iter_mut().zip(row_next.iter_mut()) {
                        let f = *zn;
                        *zn = s * *zi + c * f;
                        *zi = c * *zi - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

/// Ranks eigenvalues: descending magnitude, non-negative first, then by
/// ascending position in the value-sorted spectrum. Returns indices into
/// `values`.
fn rank_by_magnitude<T: Scalar>(values: &[T]) -> Vec<usize> {
    let mut ascending: Vec<usize> = (0..values.len()).collect();
    ascending.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut ranked = ascending.clone();
    let position: Vec<usize> = {
        let mut pos = vec![0; values.len()];
        for (p, &i) in ascending.iter().enumerate() {
            pos[i] = p;
        }
        pos
    };
    ranked.sort_by(|&a, &b| {
        let (va, vb) = (values[a], values[b]);
        vb.abs()
            .partial_cmp(&va.abs())
            .unwrap_or(Ordering::Equal)
            .then((va < T::zero()).cmp(&(vb < T::zero())))
            .then(position[a].cmp(&position[b]))
    });
    ranked
}

fn full_decomposition<T: Scalar>(tri: Tridiagonal<T>, d: usize) -> Result<EigenPairs<T>, LinalgError> {
    let n = tri.n;
    let mut zt = tri.q_transpose();
    let mut diag = tri.diag.clone();
    let mut off = tri.off.clone();
    ql_implicit(&mut diag, &mut off, tri.deflation_floor(), Some((&mut zt, n)))?;

    let ranked = rank_by_magnitude(&diag);
    let mut values = Array1::zeros(d);
    let mut vectors = Array2::zeros((n, d));
    for (j, &idx) in ranked.iter().take(d).enumerate() {
        values[j] = diag[idx];
        let row = &zt[idx * n..(idx + 1) * n];
        let norm = dot(row, row).sqrt();
        for (i, &x) in row.iter().enumerate() {
            vectors[[i, j]] = x / norm;
        }
    }
    Ok(EigenPairs { values, vectors })
}

/// An eigenvalue of one unreduced tridiagonal block.
#[derive(Clone, Copy)]
struct BlockEigenvalue<T> {
    value: T,
    block: usize,
}

fn selected_decomposition<T: Scalar>(tri: Tridiagonal<T>, d: usize) -> Result<EigenPairs<T>, LinalgError> {
    let n = tri.n;

    // Split into unreduced blocks [start, end).
    let floor = tri.deflation_floor();
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 0..n {
        if i + 1 == n || tri.negligible(i, floor) {
            blocks.push((start, i + 1));
            start = i + 1;
        }
    }

    let mut spectrum = Vec::with_capacity(n);
    for (b, &(lo, hi)) in blocks.iter().enumerate() {
        let mut dd = tri.diag[lo..hi].to_vec();
        let mut ee = tri.off[lo..hi].to_vec();
        ql_implicit(&mut dd, &mut ee, floor, None)?;
        spectrum.extend(dd.into_iter().map(|value| BlockEigenvalue { value, block: b }));
    }
    let values: Vec<T> = spectrum.iter().map(|e| e.value).collect();
    let chosen: Vec<usize> = rank_by_magnitude(&values).into_iter().take(d).collect();

    // Tridiagonal eigenvectors, zero outside their block.
    let mut local: Vec<Option<Vec<T>>> = vec![None; d];
    for (b, &(lo, hi)) in blocks.iter().enumerate() {
        let mut members: Vec<usize> = (0..d).filter(|&j| spectrum[chosen[j]].block == b).collect();
        if members.is_empty() {
            continue;
        }
        members.sort_by(|&x, &y| {
            values[chosen[x]]
                .partial_cmp(&values[chosen[y]])
                .unwrap_or(Ordering::Equal)
                .then(x.cmp(&y))
        });
        let wanted: Vec<T> = members.iter().map(|&j| values[chosen[j]]).collect();
        let vecs = block_inverse_iteration(&tri.diag[lo..hi], &tri.off[lo..hi - 1], &wanted, lo as u64);
        for (&j, v) in members.iter().zip(vecs) {
            let mut full = vec![T::zero(); n];
            full[lo..hi].copy_from_slice(&v);
            local[j] = Some(full);
        }
    }

    let mut out_values = Array1::zeros(d);
    let mut vectors = Array2::zeros((n, d));
    for (j, y) in local.into_iter().enumerate() {
        let mut y = y.expect("every selected eigenvalue belongs to a block");
        tri.apply_q(&mut y);
        let norm = dot(&y, &y).sqrt();
        for (i, &x) in y.iter().enumerate() {
            vectors[[i, j]] = x / norm;
        }
        out_values[j] = values[chosen[j]];
    }
    Ok(EigenPairs {
        values: out_values,
        vectors,
    })
}

/// LU factorisation of `T - shift I` with partial pivoting, for a
/// tridiagonal `T`. `U` has up to two superdiagonals.
struct TridiagonalLu<T> {
    u0: Vec<T>,
    u1: Vec<T>,
    u2: Vec<T>,
    mult: Vec<T>,
    swapped: Vec<bool>,
    /// Pivots smaller than this are replaced by it (sign kept).
    tiny: T,
}

impl<T: Scalar> TridiagonalLu<T> {
    fn factor(diag: &[T], off: &[T], shift: T, tiny: T) -> Self {
        let m = diag.len();
        let mut u0 = vec![T::zero(); m];
        let mut u1 = vec![T::zero(); m];
        let mut u2 = vec![T::zero(); m];
        let mut mult = vec![T::zero(); m];
        let mut swapped = vec![false; m];

        let mut p0 = diag[0] - shift;
        let mut p1 = if m > 1 { off[0] } else { T::zero() };
        for i in 0..m.saturating_sub(1) {
            let sub = off[i];
            let r0 = diag[i + 1] - shift;
            let r1 = if i + 2 < m { off[i + 1] } else { T::zero() };
            if p0.abs() >= sub.abs() {
                let l = if p0 == T::zero() { T::zero() } else { sub / p0 };
                u0[i] = p0;
                u1[i] = p1;
                mult[i] = l;
                p0 = r0 - l * p1;
                p1 = r1;
            } else {
                let l = p0 / sub;
                u0[i] = sub;
                u1[i] = r0;
                u2[i] = r1;
                mult[i] = l;
                swapped[i] = true;
                p0 = p1 - l * r0;
                p1 = -l * r1;
            }
        }
        u0[m - 1] = p0;
        TridiagonalLu {
            u0,
            u1,
            u2,
            mult,
            swapped,
            tiny,
        }
    }

    fn pivot(&self, i: usize) -> T {
        let u = self.u0[i];
        if u.abs() >= self.tiny {
            u
        } else if u < T::zero() {
            -self.tiny
        } else {
            self.tiny
        }
    }

    fn solve(&self, y: &mut [T]) {
        let m = y.len();
        for i in 0..m.saturating_sub(1) {
            if self.swapped[i] {
                y.swap(i, i + 1);
            }
            y[i + 1] -= self.mult[i] * y[i];
        }
        for i in (0..m).rev() {
            let mut acc = y[i];
            if i + 1 < m {
                acc -= self.u1[i] * y[i + 1];
            }
            if i + 2 < m {
                acc -= self.u2[i] * y[i + 2];
            }
            y[i] = acc / self.pivot(i);
        }
    }
}

/// Inverse iteration for eigenvalues `wanted` (ascending) of an unreduced
/// tridiagonal block, in the style of LAPACK's `dstein`: close eigenvalues
/// are perturbed apart and their vectors reorthogonalised against the
/// earlier members of their cluster.
fn block_inverse_iteration<T: Scalar>(diag: &[T], off: &[T], wanted: &[T], seed: u64) -> Vec<Vec<T>> {
    let m = diag.len();
    if m == 1 {
        return wanted.iter().map(|_| vec![T::one()]).collect();
    }
    let eps = T::epsilon();
    let one_norm = (0..m)
        .map(|i| {
            let left = if i > 0 { off[i - 1].abs() } else { T::zero() };
            let right = if i + 1 < m { off[i].abs() } else { T::zero() };
            diag[i].abs() + left + right
        })
        .fold(T::zero(), T::max)
        .max(T::min_positive_value());
    let ortho_tol = T::lit(1e-3) * one_norm;
    let perturb_tol = T::lit(10.0) * eps * one_norm;
    let converged_norm = (T::lit(0.1) / T::from_len(m)).sqrt();
    let tiny = eps * one_norm;

    let mut out: Vec<Vec<T>> = Vec::with_capacity(wanted.len());
    let mut cluster_start = 0;
    let mut previous = T::zero();
    for (j, &lambda) in wanted.iter().enumerate() {
        let mut shift = lambda;
        if j > 0 {
            if lambda - wanted[j - 1] > ortho_tol {
                cluster_start = j;
            }
            if shift - previous < perturb_tol {
                shift = previous + perturb_tol;
            }
        }
        previous = shift;

        let lu = TridiagonalLu::factor(diag, off, shift, tiny);
        let mut rng = SplitMix64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(j as u64 + 1));
        let mut x: Vec<T> = (0..m).map(|_| T::lit(rng.next_unit() * 2.0 - 1.0)).collect();

        let mut checks = 0;
        for _ in 0..INVERSE_MAX_ITERATIONS + INVERSE_EXTRA_ITERATIONS {
            let l1 = x.iter().fold(T::zero(), |acc, v| acc + v.abs());
            let scale = T::from_len(m) * one_norm * eps.max(lu.pivot(m - 1).abs()) / l1;
            for v in x.iter_mut() {
                *v *= scale;
            }
            lu.solve(&mut x);
            for prev in &out[cluster_start..j] {
                let proj = dot(&x, prev);
                for (xi, &pi) in x.iter_mut().zip(prev.iter()) {
                    *xi -= proj * pi;
                }
            }
            let peak = x.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
            if peak < converged_norm {
                continue;
            }
            checks += 1;
            if checks > INVERSE_EXTRA_ITERATIONS {
                break;
            }
        }

        let norm = dot(&x, &x).sqrt();
        let peak_idx = (0..m)
            .max_by(|&a, &b| {
                x[a].abs()
                    .partial_cmp(&x[b].abs())
                    .unwrap_or(Ordering::Equal)
                    .then(b.cmp(&a))
            })
            .unwrap_or(0);
        let sign = if x[peak_idx] < T::zero() { -T::one() } else { T::one() };
        out.push(x.into_iter().map(|v| sign * v / norm).collect());
    }
    out
}

/// Deterministic start vectors for inverse iteration.
struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut impl Rng) -> Array2<f64> {
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.random_range(-1.0..1.0);
                m[[i, j]] = v;
                m[[j, i]] = v;
            }
        }
        m
    }

    fn max_residual(m: &Array2<f64>, pairs: &EigenPairs<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, col) in pairs.vectors().columns().into_iter().enumerate() {
            let r = &m.dot(&col) - &(&col * pairs.values()[j]);
            worst = worst.max(r.dot(&r).sqrt());
        }
        worst
    }

    fn fro(m: &Array2<f64>) -> f64 {
        m.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn exchange_matrix() {
        let m: Array2<f64> = array![[0.0, 1.0], [1.0, 0.0]];
        let e = top_d_eigen(&m, 2).unwrap();
        assert!((e.values()[0] - 1.0).abs() < 1e-14);
        assert!((e.values()[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_ordering() {
        let m = Array2::from_diag(&array![3.0f64, -5.0, 1.0]);
        let e = top_d_eigen(&m, 2).unwrap();
        assert_eq!(e.values().to_vec(), vec![-5.0, 3.0]);
        assert!((e.vectors()[[1, 0]].abs() - 1.0).abs() < 1e-15);
        assert!((e.vectors()[[0, 1]].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reference_block_matrix() {
        // (0.5 ± sqrt(0.05)) / 2 from the characteristic polynomial
        // x^2 - 0.5x + 0.05.
        let m = array![[0.3, 0.1], [0.1, 0.2]];
        let e = top_d_eigen(&m, 2).unwrap();
        let disc = 0.05f64.sqrt();
        assert!((e.values()[0] - (0.5 + disc) / 2.0).abs() < 1e-12);
        assert!((e.values()[1] - (0.5 - disc) / 2.0).abs() < 1e-12);
        assert!((e.values()[0] - 0.361803).abs() < 1e-6);
        assert!((e.values()[1] - 0.138197).abs() < 1e-6);
    }

    #[test]
    fn tie_break_prefers_positive() {
        let m = Array2::from_diag(&array![-2.0, 1.0, 2.0]);
        let e = top_d_eigen(&m, 3).unwrap();
        assert_eq!(e.values().to_vec(), vec![2.0, -2.0, 1.0]);
    }

    #[test]
    fn rejects_bad_input() {
        let m = array![[0.0, 1.0], [0.5, 0.0]];
        assert!(matches!(top_d_eigen(&m, 1), Err(LinalgError::Asymmetric { .. })));
        let m: Array2<f64> = array![[0.0, 1.0], [1.0, 0.0]];
        assert!(matches!(top_d_eigen(&m, 0), Err(LinalgError::Dimension { .. })));
        assert!(matches!(top_d_eigen(&m, 3), Err(LinalgError::Dimension { .. })));
        let m = array![[f64::NAN]];
        assert!(matches!(top_d_eigen(&m, 1), Err(LinalgError::NonFinite { .. })));
        let m = Array2::<f64>::zeros((2, 3));
        assert!(matches!(top_d_eigen(&m, 1), Err(LinalgError::NotSquare { .. })));
    }

    #[test]
    fn one_by_one() {
        let m: Array2<f64> = array![[-4.0]];
        let e = top_d_eigen(&m, 1).unwrap();
        assert_eq!(e.values()[0], -4.0);
        assert_eq!(e.vectors()[[0, 0]].abs(), 1.0);
    }

    #[test]
    fn zero_and_identity_matrices() {
        for strategy in [Strategy::Full, Strategy::Selected] {
            let z = Array2::<f64>::zeros((80, 80));
            let e = top_d_eigen_with(&z, 3, strategy).unwrap();
            assert!(e.values().iter().all(|&v| v == 0.0));
            let id = Array2::<f64>::eye(80) * 2.5;
            let e = top_d_eigen_with(&id, 4, strategy).unwrap();
            assert!(e.values().iter().all(|&v| (v - 2.5).abs() < 1e-14));
            let gram = e.vectors().t().dot(e.vectors());
            assert!(
                (&gram - &Array2::<f64>::eye(4)).iter().all(|v| v.abs() < 1e-12),
                "{strategy:?}"
            );
        }
    }

    #[test]
    fn both_strategies_agree_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for &n in &[70usize, 150, 200] {
            let m = random_symmetric(n, &mut rng);
            let full = top_d_eigen_with(&m, 6, Strategy::Full).unwrap();
            let sel = top_d_eigen_with(&m, 6, Strategy::Selected).unwrap();
            for j in 0..6 {
                assert!((full.values()[j] - sel.values()[j]).abs() < 1e-10);
            }
            let tol = 1e-8 * fro(&m).max(1.0);
            assert!(max_residual(&m, &full) <= tol);
            assert!(max_residual(&m, &sel) <= tol);
            let gram = sel.vectors().t().dot(sel.vectors());
            assert!((&gram - &Array2::<f64>::eye(6)).iter().all(|v| v.abs() < 1e-10));
        }
    }

    #[test]
    fn clustered_spectrum_selected_path() {
        // Q diag(...) Q^T with a tight cluster at the top.
        let n = 100;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let basis = top_d_eigen_with(&random_symmetric(n, &mut rng), n, Strategy::Full)
            .unwrap()
            .into_parts()
            .1;
        let mut spectrum: Vec<f64> = (0..n).map(|i| (i as f64) / n as f64).collect();
        spectrum[0] = 10.0;
        spectrum[1] = 10.0 + 1e-13;
        spectrum[2] = 10.0 - 1e-13;
        spectrum[3] = -10.0;
        let m = basis.dot(&Array2::from_diag(&Array1::from(spectrum))).dot(&basis.t());
        let m = (&m + &m.t()) * 0.5;
        let e = top_d_eigen_with(&m, 4, Strategy::Selected).unwrap();
        assert!(max_residual(&m, &e) <= 1e-8 * fro(&m));
        let gram = e.vectors().t().dot(e.vectors());
        assert!((&gram - &Array2::<f64>::eye(4)).iter().all(|v| v.abs() < 1e-8));
        // Magnitudes tie to within rounding, so only the multiset is stable.
        let mut got = e.values().to_vec();
        got.sort_by(f64::total_cmp);
        assert!((got[0] + 10.0).abs() < 1e-10);
        assert!(got[1..].iter().all(|v| (v - 10.0).abs() < 1e-10));
    }

    #[test]
    fn low_rank_splits_cleanly() {
        let n = 120;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Array2::from_shape_fn((n, 2), |_| rng.random_range(0.0..1.0));
        let m = x.dot(&x.t());
        let e = top_d_eigen_with(&m, 2, Strategy::Selected).unwrap();
        assert!(max_residual(&m, &e) <= 1e-10 * fro(&m));
    }

    #[test]
    fn works_in_f32() {
        let m: Array2<f32> = array![[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]];
        let e = top_d_eigen(&m, 3).unwrap();
        let expected = [2.0 + 2f32.sqrt(), 2.0, 2.0 - 2f32.sqrt()];
        for (v, x) in e.values().iter().zip(expected) {
            assert!((v - x).abs() < 1e-5);
        }
    }
}

//! Dense complex matrix primitives.
//!
//! Composite indices on `A ⊗ B` are row-major: basis vector `|i⟩⊗|j⟩`
//! sits at index `i * d_B + j`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Relative eigenvalue cutoff below which a direction counts as outside the support.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Tolerance for treating tiny negative eigenvalues as numerical noise.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn zeros(r: usize, c: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(r, c)
}

/// `|i⟩⟨j|` in dimension `d`.
pub fn matrix_unit(d: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = zeros(d, d);
    m[(i, j)] = c(1.0, 0.0);
    m
}

pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| c(x, 0.0)))
}

pub fn diag_real(d: &[f64]) -> ComplexMatrix {
    let mut m = zeros(d.len(), d.len());
    for (i, &x) in d.iter().enumerate() {
        m[(i, i)] = c(x, 0.0);
    }
    m
}

pub fn trace(x: &ComplexMatrix) -> Complex64 {
    x.trace()
}

/// Largest entry modulus.
pub fn max_abs(x: &ComplexMatrix) -> f64 {
    x.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn hermitian_part(x: &ComplexMatrix) -> ComplexMatrix {
    (x + x.adjoint()) * c(0.5, 0.0)
}

pub fn is_hermitian(x: &ComplexMatrix, tol: f64) -> bool {
    x.is_square() && max_abs(&(x - x.adjoint())) <= tol * max_abs(x).max(1.0)
}

/// Eigen-decomposition of the Hermitian part of `x`, eigenvalues ascending.
pub fn hermitian_eigen(x: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = x.nrows();
    let eig = hermitian_part(x).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

pub fn hermitian_eigenvalues(x: &ComplexMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = hermitian_part(x).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Rebuild `V diag(f(λ)) V†`.
pub fn spectral_apply(vals: &[f64], vecs: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let n = vecs.nrows();
    let mut scaled = vecs.clone();
    for (k, &l) in vals.iter().enumerate() {
        let s = f(l);
        for r in 0..n {
            scaled[(r, k)] *= s;
        }
    }
    let out = &scaled * vecs.adjoint();
    hermitian_part(&out)
}

pub fn is_psd(x: &ComplexMatrix, tol: f64) -> bool {
    if !is_hermitian(x, 1e-9) {
        return false;
    }
    let v = hermitian_eigenvalues(x);
    let scale = v.iter().fold(0.0f64, |m, l| m.max(l.abs())).max(1.0);
    v.first().is_none_or(|&l| l >= -tol * scale)
}

/// Check positivity and return the spectrum, used by the functional calculus.
fn psd_spectrum(x: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !x.is_square() {
        return Err(Error::dims("square matrix", format!("{}x{}", x.nrows(), x.ncols())));
    }
    if !is_hermitian(x, 1e-8) {
        return Err(Error::NotPsd { min_eigenvalue: f64::NAN });
    }
    let (vals, vecs) = hermitian_eigen(x);
    let scale = vals.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if let Some(&lo) = vals.first() {
        if lo < -PSD_TOL * scale.max(1.0) {
            return Err(Error::NotPsd { min_eigenvalue: lo });
        }
    }
    Ok((vals, vecs))
}

/// `A^α` for PSD `A`, restricted to the support.
///
/// Eigenvalues below `1e-10 · λ_max` are treated as zero; for `α ≤ 0` they
/// stay zero, so negative powers are pseudo-inverses and `α = 0` gives the
/// support projector.
pub fn frac_power(a: &ComplexMatrix, alpha: f64) -> Result<ComplexMatrix> {
    let (vals, vecs) = psd_spectrum(a)?;
    let top = vals.last().copied().unwrap_or(0.0);
    let cut = RANK_CUTOFF * top;
    Ok(spectral_apply(&vals, &vecs, |l| {
        if l <= cut || l <= 0.0 {
            0.0
        } else {
            l.powf(alpha)
        }
    }))
}

/// Logarithm on the support, zero elsewhere.
pub fn log_psd(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (vals, vecs) = psd_spectrum(a)?;
    let top = vals.last().copied().unwrap_or(0.0);
    let cut = RANK_CUTOFF * top;
    Ok(spectral_apply(&vals, &vecs, |l| if l <= cut { 0.0 } else { l.ln() }))
}

/// Orthogonal projector onto the support.
pub fn support_projector(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    frac_power(a, 0.0)
}

pub fn tensor(x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
    x.kronecker(y)
}

pub fn tensor_all(ms: &[ComplexMatrix]) -> ComplexMatrix {
    let mut it = ms.iter();
    let first = it.next().cloned().unwrap_or_else(|| identity(1));
    it.fold(first, |acc, m| acc.kronecker(m))
}

/// Partial trace over one factor of a `d_A ⊗ d_B` operator.
pub fn partial_trace(x: &ComplexMatrix, dims: (usize, usize), traced: Subsystem) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    let n = da * db;
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::dims(
            format!("{n}x{n} for dims ({da},{db})"),
            format!("{}x{}", x.nrows(), x.ncols()),
        ));
    }
    Ok(match traced {
        Subsystem::B => ComplexMatrix::from_fn(da, da, |i, j| (0..db).map(|k| x[(i * db + k, j * db + k)]).sum()),
        Subsystem::A => ComplexMatrix::from_fn(db, db, |k, l| (0..da).map(|i| x[(i * db + k, i * db + l)]).sum()),
    })
}

/// Transpose in the computational basis.
pub fn basis_transpose(x: &ComplexMatrix) -> ComplexMatrix {
    x.transpose()
}

/// Entrywise complex conjugate in the computational basis.
pub fn basis_conjugate(x: &ComplexMatrix) -> ComplexMatrix {
    x.map(|z| z.conj())
}

/// Singular values, descending.
pub fn singular_values(x: &ComplexMatrix) -> Vec<f64> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = x.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Row-major vectorisation: `vec(X)[i*d + j] = X[i][j]`.
pub fn vec_row_major(x: &ComplexMatrix) -> Vec<Complex64> {
    let (r, cc) = x.shape();
    let mut v = Vec::with_capacity(r * cc);
    for i in 0..r {
        for j in 0..cc {
            v.push(x[(i, j)]);
        }
    }
    v
}

pub fn unvec_row_major(v: &[Complex64], rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(rows, cols, v)
}

/// Swap the two tensor factors of an operator on `d_A ⊗ d_B`.
pub fn swap_factors(x: &ComplexMatrix, dims: (usize, usize)) -> ComplexMatrix {
    let (da, db) = dims;
    ComplexMatrix::from_fn(da * db, da * db, |r, s| {
        let (j, i) = (r / da, r % da);
        let (l, k) = (s / da, s % da);
        x[(i * db + j, k * db + l)]
    })
}

/// `X ⊗ Y` on `(A B) ⊗ (A' B')` regrouped to `(A A') ⊗ (B B')`.
pub fn tensor_regroup(x: &ComplexMatrix, dx: (usize, usize), y: &ComplexMatrix, dy: (usize, usize)) -> ComplexMatrix {
    let (a1, b1) = dx;
    let (a2, b2) = dy;
    let bb = b1 * b2;
    let n = a1 * a2 * bb;
    ComplexMatrix::from_fn(n, n, |r, s| {
        let (ra, rb) = (r / bb, r % bb);
        let (sa, sb) = (s / bb, s % bb);
        let (i1, i2) = (ra / a2, ra % a2);
        let (k1, k2) = (rb / b2, rb % b2);
        let (j1, j2) = (sa / a2, sa % a2);
        let (l1, l2) = (sb / b2, sb % b2);
        x[(i1 * b1 + k1, j1 * b1 + l1)] * y[(i2 * b2 + k2, j2 * b2 + l2)]
    })
}

/// Frobenius inner product `tr(X† Y)`.
pub fn hs_inner(x: &ComplexMatrix, y: &ComplexMatrix) -> Complex64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Normalise by the trace so the result is a density matrix.
pub fn normalize_trace(x: &ComplexMatrix) -> ComplexMatrix {
    let t = trace(x).re;
    x / c(t, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.5, -0.5), c(0.5, 0.5), c(1.0, 0.0)],
        )
    }

    #[test]
    fn square_root_squares_back() {
        let a = sample();
        let s = frac_power(&a, 0.5).unwrap();
        assert!(max_abs(&(&s * &s - &a)) < 1e-12);
    }

    #[test]
    fn pseudo_inverse_on_support() {
        let p = from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let inv = frac_power(&p, -1.0).unwrap();
        assert!(max_abs(&(inv - &p)) < 1e-14);
        let proj = support_projector(&p).unwrap();
        assert!(max_abs(&(proj - &p)) < 1e-14);
    }

    #[test]
    fn negative_matrix_rejected() {
        let m = from_real(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(matches!(frac_power(&m, 0.5), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn partial_traces_of_product() {
        let a = sample();
        let b = from_real(3, 3, &[1.0, 0.2, 0.0, 0.2, 2.0, 0.1, 0.0, 0.1, 3.0]);
        let ab = tensor(&a, &b);
        let ta = partial_trace(&ab, (2, 3), Subsystem::A).unwrap();
        let tb = partial_trace(&ab, (2, 3), Subsystem::B).unwrap();
        assert!(max_abs(&(ta - &b * trace(&a))) < 1e-12);
        assert!(max_abs(&(tb - &a * trace(&b))) < 1e-12);
    }

    #[test]
    fn swap_of_product_is_reversed_product() {
        let a = sample();
        let b = from_real(3, 3, &[1.0, 0.2, 0.0, 0.2, 2.0, 0.1, 0.0, 0.1, 3.0]);
        let s = swap_factors(&tensor(&a, &b), (2, 3));
        assert!(max_abs(&(s - tensor(&b, &a))) < 1e-14);
    }

    #[test]
    fn regroup_of_products() {
        let a = sample();
        let b = from_real(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let x = from_real(3, 3, &[1.0, 0.2, 0.0, 0.2, 2.0, 0.1, 0.0, 0.1, 3.0]);
        let y = from_real(1, 1, &[4.0]);
        let got = tensor_regroup(&tensor(&a, &b), (2, 2), &tensor(&x, &y), (3, 1));
        let want = tensor(&tensor(&a, &x), &tensor(&b, &y));
        assert!(max_abs(&(got - want)) < 1e-14);
    }

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let a = sample();
        let (v, u) = hermitian_eigen(&a);
        assert!(v[0] <= v[1]);
        let back = spectral_apply(&v, &u, |l| l);
        assert!(max_abs(&(back - a)) < 1e-12);
        assert_relative_eq!(v.iter().sum::<f64>(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn vec_roundtrip() {
        let a = sample();
        let v = vec_row_major(&a);
        assert_eq!(v[1], a[(0, 1)]);
        assert_eq!(unvec_row_major(&v, 2, 2), a);
    }
}

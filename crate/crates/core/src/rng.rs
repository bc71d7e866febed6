//! Seeded generators and random matrix ensembles.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matcore::{c, ComplexMatrix};

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` under a base seed.
pub fn stream(seed: u64, index: u64) -> Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index.wrapping_add(1));
    r
}

pub fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre(rng: &mut Rng, rows: usize, cols: usize) -> ComplexMatrix {
    DMatrix::from_fn(rows, cols, |_, _| c(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2)
}

/// Real Gaussian matrix embedded as complex.
pub fn real_gaussian(rng: &mut Rng, rows: usize, cols: usize) -> ComplexMatrix {
    DMatrix::from_fn(rows, cols, |_, _| c(normal(rng), 0.0))
}

/// Random PSD matrix `G G†` with unit trace.
pub fn random_psd(rng: &mut Rng, d: usize, rank: usize) -> ComplexMatrix {
    let g = ginibre(rng, d, rank.max(1));
    let m = &g * g.adjoint();
    let t = m.trace().re;
    m / Complex64::new(t, 0.0)
}

/// Haar-random isometry with `cols` orthonormal columns in dimension `rows`.
pub fn haar_isometry(rng: &mut Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let g = ginibre(rng, rows, cols);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..cols {
        let d = r[(k, k)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..rows {
            q[(i, k)] *= ph;
        }
    }
    q
}

pub fn uniform(rng: &mut Rng) -> f64 {
    rand::Rng::random::<f64>(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{identity, max_abs};

    #[test]
    fn isometry_is_orthonormal() {
        let mut r = seeded(3);
        let v = haar_isometry(&mut r, 6, 3);
        assert!(max_abs(&(v.adjoint() * &v - identity(3))) < 1e-12);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = normal(&mut stream(7, 0));
        let b = normal(&mut stream(7, 0));
        let z = normal(&mut stream(7, 1));
        assert_eq!(a, b);
        assert_ne!(a, z);
    }
}

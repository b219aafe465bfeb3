//! Seeded random matrices and Gaussian states for tests, property checks and the
//! oracle cross-check driver.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::gaussian::CovarianceMatrix;
use crate::linalg::{dagger, eigh, hermitian_part, orthonormalize_columns, CMat};

pub type StateRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> StateRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_shape_fn((rows, cols), |_| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

/// GUE-distributed Hermitian matrix.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    hermitian_part(&random_complex_matrix(n, n, rng))
}

/// Haar-random unitary (Gram-Schmidt of a complex Gaussian matrix).
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let mut m = random_complex_matrix(n, n, rng);
    orthonormalize_columns(&mut m).expect("Gaussian matrix is full rank");
    m
}

/// `n_modes x n_orbitals` matrix with orthonormal columns.
pub fn random_orbitals<R: Rng + ?Sized>(n_modes: usize, n_orbitals: usize, rng: &mut R) -> CMat {
    let mut m = random_complex_matrix(n_modes, n_orbitals, rng);
    orthonormalize_columns(&mut m).expect("Gaussian matrix is full rank");
    m
}

/// Pure Slater-determinant covariance with `n_orbitals` filled random orbitals.
pub fn random_pure_covariance<R: Rng + ?Sized>(
    n_modes: usize,
    n_orbitals: usize,
    rng: &mut R,
) -> CovarianceMatrix {
    CovarianceMatrix::from_orbitals(&random_orbitals(n_modes, n_orbitals, rng))
        .expect("orthonormal orbitals")
}

/// Mixed Gaussian covariance with a random eigenbasis and occupations drawn uniformly
/// from `(margin, 1 - margin)`.
pub fn random_mixed_covariance<R: Rng + ?Sized>(
    n_modes: usize,
    margin: f64,
    rng: &mut R,
) -> CovarianceMatrix {
    let u = random_unitary(n_modes, rng);
    let mut scaled = u.clone();
    for mut col in scaled.columns_mut() {
        let occ = rng.random_range(margin..1.0 - margin);
        col.mapv_inplace(|z| z * occ);
    }
    CovarianceMatrix::new(scaled.dot(&dagger(&u))).expect("Hermitian by construction")
}

/// Random Hermitian matrix normalized to the given Frobenius norm.
pub fn random_hermitian_with_norm<R: Rng + ?Sized>(n: usize, norm: f64, rng: &mut R) -> CMat {
    let h = random_hermitian(n, rng);
    let f = crate::linalg::frobenius_norm(&h);
    if f == 0.0 {
        return h;
    }
    h.mapv(|z| z * (norm / f))
}

/// Random single-particle unitary close to the identity, `exp(i eps H)`.
pub fn random_near_identity<R: Rng + ?Sized>(n: usize, eps: f64, rng: &mut R) -> CMat {
    let h = random_hermitian(n, rng);
    eigh(&h).expect("Hermitian").exp_i(eps)
}

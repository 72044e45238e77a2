//! Random test matrices. Only compiled for tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::decomp::nearest_unitary;
use super::density::DensityOperator;
use super::matrix::{ComplexMatrix, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(r: &mut ChaCha8Rng) -> C64 {
    C64::new(r.sample(StandardNormal), r.sample(StandardNormal))
}

/// Gaussian entries scaled by `scale`.
pub fn random_matrix(r: &mut ChaCha8Rng, n: usize, scale: f64) -> ComplexMatrix {
    let data = (0..n * n).map(|_| gaussian(r) * scale).collect();
    ComplexMatrix::from_vec(n, n, data).unwrap()
}

pub fn random_hermitian(r: &mut ChaCha8Rng, n: usize, scale: f64) -> ComplexMatrix {
    random_matrix(r, n, scale).hermitian_part()
}

pub fn random_unitary(r: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    nearest_unitary(&random_matrix(r, n, 1.0)).unwrap()
}

pub fn random_density(r: &mut ChaCha8Rng, n: usize) -> DensityOperator {
    let g = random_matrix(r, n, 1.0);
    let m = g.matmul(&g.adjoint());
    let t = m.trace().re;
    let mut m = m.scale_re(1.0 / t);
    m.symmetrize();
    DensityOperator::new(m).unwrap()
}

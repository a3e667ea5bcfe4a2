#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triq::linalg::{matrix_exp_hermitian, ComplexMatrix, DensityMatrix, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(r: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| C64::new(r.random::<f64>() * 2.0 - 1.0, r.random::<f64>() * 2.0 - 1.0))
}

pub fn random_hermitian(r: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let a = random_matrix(r, dim);
    (&a + &a.adjoint()).scale_real(0.5)
}

pub fn random_state(r: &mut ChaCha8Rng) -> DensityMatrix {
    let a = random_matrix(r, 8);
    let m = &a * &a.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.scale_real(1.0 / tr)).unwrap()
}

pub fn random_ket(r: &mut ChaCha8Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..8).map(|_| C64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

pub fn random_pure(r: &mut ChaCha8Rng) -> DensityMatrix {
    DensityMatrix::from_ket(&random_ket(r)).unwrap()
}

pub fn random_unitary(r: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    matrix_exp_hermitian(&random_hermitian(r, dim), 3.0).unwrap()
}

#![allow(dead_code)]

use hybridqf::linalg::hermitian_min_eigenvalue;
use hybridqf::model::b_matrix;
use hybridqf::{make_dims, HybridModel, LevyMeasure, SymplecticForm};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform<R: Rng>(r: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

pub fn random_vector<R: Rng>(r: &mut R, d: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(d, |_, _| uniform(r, -scale, scale))
}

pub fn random_matrix<R: Rng>(r: &mut R, d: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |_, _| uniform(r, -scale, scale))
}

pub fn random_psd<R: Rng>(r: &mut R, d: usize, scale: f64) -> DMatrix<f64> {
    let m = random_matrix(r, d, scale);
    &m * m.transpose()
}

/// Random model with `1 ≤ d ≤ max_d` that passes positivity, with a few atoms.
pub fn random_model<R: Rng>(r: &mut R, max_d: usize) -> HybridModel<f64> {
    let (n, s) = loop {
        let n = r.random_range(0..=max_d / 2);
        let s = r.random_range(0..=max_d);
        if 2 * n + s >= 1 && 2 * n + s <= max_d {
            break (n, s);
        }
    };
    let dims = make_dims(n, s).unwrap();
    let d = dims.d();
    let sigma = SymplecticForm::<f64>::new(dims);
    let z = random_matrix(r, d, 0.8);
    let mut a = random_psd(r, d, 0.6);
    let lam = hermitian_min_eigenvalue(&a, &b_matrix(&z, &sigma));
    if lam < 0.05 {
        a += DMatrix::identity(d, d) * (0.05 - lam);
    }
    let mut nu = LevyMeasure::empty(d);
    for _ in 0..r.random_range(0..=3) {
        let eta = random_vector(r, d, 1.5);
        if eta.norm() > 1e-3 {
            nu = nu.with_atom(uniform(r, 0.1, 1.0), eta);
        }
    }
    let alpha = random_vector(r, d, 1.0);
    HybridModel::new(dims, z, a, nu, alpha).unwrap()
}

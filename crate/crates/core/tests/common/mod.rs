#![allow(dead_code)]

pub mod circuits;
pub mod closed_form;
pub mod contraction;
pub mod identities;

use num_complex::Complex64;
use qudit_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_params(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-std::f64::consts::TAU..std::f64::consts::TAU)).collect()
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn max_diff(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
    a.max_abs_diff(b)
}

/// Largest element-wise error relative to the larger of the two magnitudes
/// (floored at 1 so that tiny entries are compared absolutely).
pub fn max_rel_diff(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).norm() / x.norm().max(y.norm()).max(1.0))
        .fold(0.0, f64::max)
}

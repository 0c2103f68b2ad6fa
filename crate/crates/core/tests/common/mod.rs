#![allow(dead_code)]

pub mod oracles;

use conetest_core::model::Dataset;
use conetest_core::rng::{self, Rng};
use conetest_core::{Matrix, Vector};

pub fn gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng::std_normal(rng))
}

pub fn gaussian_vector(rng: &mut Rng, len: usize) -> Vector {
    Vector::from_fn(len, |_, _| rng::std_normal(rng))
}

/// `AAᵀ/d + ridge·I`.
pub fn random_pd(rng: &mut Rng, d: usize, ridge: f64) -> Matrix {
    let a = gaussian_matrix(rng, d, d);
    let m = &a * a.transpose() / d as f64 + Matrix::identity(d, d) * ridge;
    (&m + m.transpose()) * 0.5
}

pub fn random_dataset(rng: &mut Rng, n: usize, p: usize, sigma: f64) -> Dataset {
    let x = gaussian_matrix(rng, n, p);
    let beta = Vector::from_fn(p, |i, _| if i < 2 { 1.0 - i as f64 * 1.5 } else { 0.0 });
    let y = &x * beta + gaussian_vector(rng, n) * sigma;
    Dataset::new(x, y, sigma).unwrap()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

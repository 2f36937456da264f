#![allow(dead_code)]

use mwcov_core::{DMatrix, DVector, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn rand_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = randn(rng, n, n);
    &m * m.transpose() / n as f64 + DMatrix::identity(n, n) * 0.5
}

pub fn rand_sym(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = randn(rng, n, n);
    (&m + m.transpose()) * 0.5
}

/// Tridiagonal `1` on the diagonal and `rho` next to it.
pub fn chain(n: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else if i.abs_diff(j) == 1 { rho } else { 0.0 })
}

/// Gaussian samples with precision `omega`, reshaped to `dims`.
pub fn sample_precision(omega: &DMatrix<f64>, dims: &[usize], n: usize, seed: u64) -> Vec<Tensor> {
    let mut r = rng(seed);
    let d = omega.nrows();
    let l = omega.clone().cholesky().expect("precision must be PD");
    (0..n)
        .map(|_| {
            let z = DVector::from_fn(d, |_, _| r.sample(StandardNormal));
            // Ω = L Lᵀ, x = L⁻ᵀ z has covariance Ω⁻¹
            let x = l.l().transpose().solve_upper_triangular(&z).unwrap();
            Tensor::new(dims.to_vec(), x.as_slice().to_vec()).unwrap()
        })
        .collect()
}

/// Dense `F_K ⊗ ... ⊗ F_1` for factors on modes `1..K`.
pub fn kron_desc(factors: &[DMatrix<f64>]) -> DMatrix<f64> {
    factors.iter().rev().fold(DMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

/// Dense Kronecker sum with factor `k` on mode `k`.
pub fn kron_sum_dense(factors: &[DMatrix<f64>]) -> DMatrix<f64> {
    let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    let d: usize = dims.iter().product();
    let mut out = DMatrix::zeros(d, d);
    for (k, f) in factors.iter().enumerate() {
        let parts: Vec<DMatrix<f64>> = dims.iter().enumerate().map(|(j, &n)| if j == k { f.clone() } else { DMatrix::identity(n, n) }).collect();
        out += kron_desc(&parts);
    }
    out
}

pub fn rel_frob(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    (est - truth).norm() / truth.norm()
}

/// Matthews correlation on off-diagonal pairs `i < j` with `|x| > tol`.
pub fn mcc(est: &DMatrix<f64>, truth: &DMatrix<f64>, tol: f64) -> f64 {
    let (mut tp, mut tn, mut fp, mut fn_) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..est.ncols() {
        for i in 0..j {
            match (est[(i, j)].abs() > tol, truth[(i, j)].abs() > tol) {
                (true, true) => tp += 1.0,
                (false, false) => tn += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fn_ += 1.0,
            }
        }
    }
    let den: f64 = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)) as f64;
    if den == 0.0 {
        0.0
    } else {
        (tp * tn - fp * fn_) / den.sqrt()
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

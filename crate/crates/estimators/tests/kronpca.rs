mod support;

use mwcov_core::ops::rearrange;
use mwcov_core::{DMatrix, Tensor};
use mwcov_estimators::{kp_ls, kp_ls_factors, kpca, kpca_terms, SampleStats};
use support::*;

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

#[test]
fn kp_ls_exact_product() {
    let mut r = rng(1);
    for _ in 0..5 {
        let a = rand_spd(&mut r, 2);
        let b = rand_spd(&mut r, 3);
        let s = a.kronecker(&b);
        let (ah, bh) = kp_ls_factors(&s, 2, 3).unwrap();
        assert!((ah.kronecker(&bh) - &s).norm() <= 1e-10);
        assert!(bh.trace() > 0.0);
    }
}

#[test]
fn kp_ls_identity() {
    let (a, b) = kp_ls_factors(&DMatrix::identity(6, 6), 2, 3).unwrap();
    assert!((a.kronecker(&b) - DMatrix::identity(6, 6)).amax() < 1e-12);
    // scale sits on the left factor, B̂ has unit Frobenius norm
    assert!((b.norm() - 1.0).abs() < 1e-12);
    assert!((&a * b[(0, 0)] - DMatrix::identity(2, 2)).amax() < 1e-12);
}

#[test]
fn kp_ls_residual_is_tail_energy() {
    let mut r = rng(2);
    for _ in 0..10 {
        let s = randn(&mut r, 6, 6);
        let (a, b) = kp_ls_factors(&s, 2, 3).unwrap();
        let sv = singular_values(&rearrange(&s, 2, 3).unwrap());
        let tail: f64 = sv[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(((a.kronecker(&b) - &s).norm() - tail).abs() <= 1e-10);
    }
}

#[test]
fn kpca_limits() {
    let mut r = rng(3);
    let x = randn(&mut r, 6, 6);
    let s = &x * x.transpose();
    let full = kpca_terms(&s, 2, 3, 0.0, None).unwrap();
    assert!((full.materialize_capped(100).unwrap() - &s).amax() <= 1e-10);
    let sigma1 = singular_values(&rearrange(&s, 2, 3).unwrap())[0];
    let none = kpca_terms(&s, 2, 3, 2.0 * sigma1 * (1.0 + 1e-12), None).unwrap();
    assert_eq!(none.rank(), 0);
    assert_eq!(none.materialize_capped(100).unwrap(), DMatrix::zeros(6, 6));
}

#[test]
fn kpca_two_term_recovery() {
    let mut r = rng(4);
    // orthogonal-ish well separated terms
    let a1 = rand_spd(&mut r, 3) * 10.0;
    let b1 = rand_spd(&mut r, 2);
    let a2 = rand_sym(&mut r, 3);
    let b2 = rand_sym(&mut r, 2);
    let s = a1.kronecker(&b1) + a2.kronecker(&b2);
    let sv = singular_values(&rearrange(&s, 3, 2).unwrap());
    assert!(sv[2] < 1e-10 && sv[1] > 1e-3);
    let lambda = sv[1]; // between 2σ₃ = 0 and 2σ₂
    let fit = kpca_terms(&s, 3, 2, lambda, None).unwrap();
    assert_eq!(fit.rank(), 2);
    // rescaling each term back by σ/(σ - λ/2) undoes the shrinkage
    let recon = fit
        .terms
        .iter()
        .zip(&sv)
        .fold(DMatrix::zeros(6, 6), |acc, ((a, b), &sig)| acc + a.kronecker(b) * (sig / (sig - lambda / 2.0)));
    assert!((recon - &s).norm() <= 1e-8);
    let capped = kpca_terms(&s, 3, 2, 0.0, Some(1)).unwrap();
    assert_eq!(capped.rank(), 1);
}

#[test]
fn data_and_covariance_routes_agree() {
    let mut r = rng(5);
    let data: Vec<Tensor> = (0..9).map(|_| Tensor::new(vec![4, 3], randn(&mut r, 12, 1).as_slice().to_vec()).unwrap()).collect();
    let stats = SampleStats::from_data(&data, true).unwrap();
    let s = stats.covariance(1000).unwrap();
    let cov = SampleStats::from_cov(s.clone(), &[4, 3]).unwrap();
    let a = kp_ls(&stats).unwrap();
    let b = kp_ls(&cov).unwrap();
    assert!((a.model.materialize().unwrap() - b.model.materialize().unwrap()).amax() < 1e-10);
    let (af, bf) = kp_ls_factors(&s, 3, 4).unwrap();
    assert!((a.model.materialize().unwrap() - af.kronecker(&bf)).amax() < 1e-10);
    for lambda in [0.0, 0.05, 0.5] {
        let x = kpca(&stats, lambda, None).unwrap().model.materialize().unwrap();
        let y = kpca(&cov, lambda, None).unwrap().model.materialize().unwrap();
        assert!((x - y).amax() < 1e-9);
    }
}

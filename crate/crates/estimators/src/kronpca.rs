//! Kronecker-product covariance fits through the rearrangement `R`, under
//! which `A ⊗ B` becomes the rank-one matrix `vec(A) vec(B)ᵀ`.
//!
//! `d1` is the side of the Kronecker-left factor, which acts on the slow
//! tensor mode. For a two-mode tensor with dims `[d2, d1]` the flat sample
//! vector is exactly the Kronecker ordering.

use std::time::Instant;

use mwcov_core::ops::rearrange;
use mwcov_core::{CoreError, DMatrix, DVector, FactorSet, StructuredMatrix};
use nalgebra::SymmetricEigen;

use crate::config::Method;
use crate::error::{EstError, Result};
use crate::result::{FitResult, KronTerms, Model};
use crate::stats::SampleStats;

/// Singular triplets of `R(S)` in decreasing order.
struct Spectrum {
    sigma: Vec<f64>,
    /// Left vectors, length `d1²`.
    u: Vec<DVector<f64>>,
    /// Right vectors, length `d2²`.
    v: Vec<DVector<f64>>,
}

fn check_sides(s: &DMatrix<f64>, d1: usize, d2: usize) -> Result<()> {
    if d1 == 0 || d2 == 0 || s.nrows() != d1 * d2 || s.ncols() != d1 * d2 {
        return Err(CoreError::DimensionMismatch(format!("{}x{} is not a {d1}*{d2} square", s.nrows(), s.ncols())).into());
    }
    if s.iter().any(|x| !x.is_finite()) {
        return Err(CoreError::NonFinite.into());
    }
    Ok(())
}

/// Singular triplets from the eigenvectors of the smaller Gram matrix of
/// `r`, back-projected through `r`. nalgebra's bidiagonal SVD returns wrong
/// singular vectors for some exactly low-rank tall inputs, which are the
/// common case here.
fn svd_spectrum(r: DMatrix<f64>) -> Result<Spectrum> {
    let left = r.nrows() <= r.ncols();
    let gram = if left { &r * r.transpose() } else { r.transpose() * &r };
    let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 0).ok_or(EstError::Svd)?;
    let mut triplets: Vec<(f64, DVector<f64>, DVector<f64>)> = eig
        .eigenvectors
        .column_iter()
        .filter_map(|x| {
            let x = x.into_owned();
            let y = if left { r.tr_mul(&x) } else { &r * &x };
            let sigma = y.norm();
            (sigma > 0.0).then(|| {
                let y = y / sigma;
                if left { (sigma, x, y) } else { (sigma, y, x) }
            })
        })
        .collect();
    triplets.sort_by(|a, b| b.0.total_cmp(&a.0));
    if triplets.is_empty() {
        // S = 0: any unit pair spans the (zero) leading term
        let mut u = DVector::zeros(r.nrows());
        let mut v = DVector::zeros(r.ncols());
        u[0] = 1.0;
        v[0] = 1.0;
        triplets.push((0.0, u, v));
    }
    Ok(Spectrum {
        sigma: triplets.iter().map(|t| t.0).collect(),
        u: triplets.iter().map(|t| t.1.clone()).collect(),
        v: triplets.into_iter().map(|t| t.2).collect(),
    })
}

/// Leading Kronecker pair `(Â, B̂)` of `S`: `Â = R⁻¹(σ₁u₁)`, `B̂ = R⁻¹(v₁)`.
/// Signs are chosen so that `tr(B̂) >= 0`.
pub fn kp_ls_factors(s: &DMatrix<f64>, d1: usize, d2: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_sides(s, d1, d2)?;
    let spec = svd_spectrum(rearrange(s, d1, d2)?)?;
    let (mut a, mut b) = pair(&spec, 0, d1, d2, spec.sigma[0]);
    if b.trace() < 0.0 {
        a = -a;
        b = -b;
    }
    Ok((a, b))
}

fn pair(spec: &Spectrum, l: usize, d1: usize, d2: usize, weight: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let a = DMatrix::from_column_slice(d1, d1, (&spec.u[l] * weight).as_slice());
    let b = DMatrix::from_column_slice(d2, d2, spec.v[l].as_slice());
    (a, b)
}

/// Nuclear-norm-penalized sum of Kronecker products: singular values of
/// `R(S)` are shrunk by `λ/2` and the survivors are kept, at most
/// `max_rank` of them.
pub fn kpca_terms(s: &DMatrix<f64>, d1: usize, d2: usize, lambda: f64, max_rank: Option<usize>) -> Result<KronTerms> {
    check_sides(s, d1, d2)?;
    check_lambda(lambda)?;
    let spec = svd_spectrum(rearrange(s, d1, d2)?)?;
    Ok(shrink(&spec, d1, d2, lambda, max_rank))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(EstError::Config(format!("penalty {lambda} must be finite and non-negative")));
    }
    Ok(())
}

fn shrink(spec: &Spectrum, d1: usize, d2: usize, lambda: f64, max_rank: Option<usize>) -> KronTerms {
    let cap = max_rank.unwrap_or(usize::MAX);
    let terms = spec
        .sigma
        .iter()
        .enumerate()
        .take_while(|&(l, &sig)| l < cap && sig - lambda / 2.0 > 0.0)
        .map(|(l, &sig)| pair(spec, l, d1, d2, sig - lambda / 2.0))
        .collect();
    KronTerms { d1, d2, terms }
}

/// Singular triplets of `R(S)` with `S` the sample covariance, without ever
/// forming `S`. With `X_n` the `d2 x d1` matrix of sample `n`,
/// `R(S) R(S)ᵀ = (1/N²) Σ_{n,m} C_nm ⊗ C_nm`, `C_nm = X_nᵀ X_m`, and the
/// right vector for `u` is `R(S)ᵀu / σ = vec((1/(Nσ)) Σ_n X_n U X_nᵀ)`.
/// The smaller of the two Gram sides is used.
fn data_spectrum(xs: &[DMatrix<f64>], d1: usize, d2: usize, threshold: f64, cap: usize) -> Result<Spectrum> {
    let n = xs.len() as f64;
    let left_side = d1 <= d2;
    let (p, mats): (usize, Vec<DMatrix<f64>>) = if left_side { (d1, xs.to_vec()) } else { (d2, xs.iter().map(|x| x.transpose()).collect()) };
    // with left_side false the roles of the factors swap: C_nm = X_n X_mᵀ.
    // G[(i p + j), (k p + l)] = Σ C[i,k] C[j,l] is a reshuffle of V Vᵀ with
    // the columns of V the vectorized C_nm.
    let mut v = DMatrix::zeros(p * p, mats.len() * mats.len());
    for (a, xa) in mats.iter().enumerate() {
        for (b, xb) in mats.iter().enumerate() {
            let c = xa.transpose() * xb;
            v.column_mut(a * mats.len() + b).copy_from_slice(c.as_slice());
        }
    }
    let m = &v * v.transpose();
    drop(v);
    let g = DMatrix::from_fn(p * p, p * p, |r, c| {
        let (i, j, k, l) = (r / p, r % p, c / p, c % p);
        m[(i + p * k, j + p * l)]
    }) / (n * n);
    drop(m);
    let eig = SymmetricEigen::try_new((&g + g.transpose()) * 0.5, f64::EPSILON, 0).ok_or(EstError::Svd)?;
    let mut order: Vec<usize> = (0..p * p).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let mut spec = Spectrum {
        sigma: order.iter().map(|&l| eig.eigenvalues[l].max(0.0).sqrt()).collect(),
        u: Vec::new(),
        v: Vec::new(),
    };
    let floor = spec.sigma[0] * 1e-12;
    // right vectors only for the terms that can be kept
    for (rank, &l) in order.iter().enumerate() {
        let sig = spec.sigma[rank];
        if rank > 0 && (rank >= cap || sig <= threshold) {
            break;
        }
        let w = eig.eigenvectors.column(l).into_owned();
        let q = mats[0].nrows();
        let ov = if sig <= floor {
            DVector::zeros(q * q)
        } else {
            let wm = DMatrix::from_column_slice(p, p, w.as_slice());
            let mut other = DMatrix::zeros(q, q);
            for x in &mats {
                other += x * &wm * x.transpose();
            }
            other /= n * sig;
            DVector::from_column_slice(other.as_slice())
        };
        if left_side {
            spec.u.push(w);
            spec.v.push(ov);
        } else {
            spec.u.push(ov);
            spec.v.push(w);
        }
    }
    Ok(spec)
}

/// Samples as `d2 x d1` matrices; requires a two-mode layout `[d2, d1]`.
fn sample_matrices(stats: &SampleStats) -> Result<Option<(Vec<DMatrix<f64>>, usize, usize)>> {
    let dims = stats.dims();
    if dims.len() != 2 {
        return Err(EstError::Config(format!("Kronecker PCA needs two modes, got dims {dims:?}")));
    }
    let (d2, d1) = (dims[0], dims[1]);
    Ok(stats
        .samples()
        .map(|xs| (xs.iter().map(|x| DMatrix::from_column_slice(d2, d1, x.as_slice())).collect(), d1, d2)))
}

/// Spectrum of `R(S)`; singular vectors are guaranteed for the leading
/// term and for those ranked below `cap` with `σ > threshold`.
fn spectrum_of(stats: &SampleStats, threshold: f64, cap: usize) -> Result<(Spectrum, usize, usize)> {
    match sample_matrices(stats)? {
        Some((xs, d1, d2)) => Ok((data_spectrum(&xs, d1, d2, threshold, cap)?, d1, d2)),
        None => {
            let (d2, d1) = (stats.dims()[0], stats.dims()[1]);
            let s = stats.covariance(usize::MAX)?;
            Ok((svd_spectrum(rearrange(&s, d1, d2)?)?, d1, d2))
        }
    }
}

fn frob_sq(s: &Spectrum) -> f64 {
    s.sigma.iter().map(|x| x * x).sum()
}

/// `½‖R(S) - M‖²_F + λ‖M‖_*` at the shrunk solution, from the spectrum.
fn kpca_objective(spec: &Spectrum, lambda: f64, max_rank: Option<usize>) -> f64 {
    let cap = max_rank.unwrap_or(usize::MAX);
    let total = frob_sq(spec);
    let mut f = 0.5 * total;
    for (l, &sig) in spec.sigma.iter().enumerate() {
        let kept = if l < cap { (sig - lambda / 2.0).max(0.0) } else { 0.0 };
        f += 0.5 * ((sig - kept).powi(2) - sig * sig) + lambda * kept;
    }
    f
}

/// Least-squares Kronecker-product covariance fit. The statistics must have
/// two modes `[d2, d1]`; the fitted model is `Â ⊗ B̂` with `Â` on mode 1.
pub fn kp_ls(stats: &SampleStats) -> Result<FitResult> {
    let start = Instant::now();
    let (spec, d1, d2) = spectrum_of(stats, f64::INFINITY, 1)?;
    let (mut a, mut b) = pair(&spec, 0, d1, d2, spec.sigma[0]);
    if b.trace() < 0.0 {
        a = -a;
        b = -b;
    }
    let resid = (frob_sq(&spec) - spec.sigma[0].powi(2)).max(0.0);
    let a = (&a + a.transpose()) * 0.5;
    let b = (&b + b.transpose()) * 0.5;
    let factors = FactorSet::new(vec![b, a])?;
    Ok(FitResult {
        method: Method::KpLs,
        model: Model::Structured(StructuredMatrix::kron_product(factors.clone())),
        factors: Some(factors),
        objective_trace: vec![0.5 * resid],
        iterations: 1,
        converged: true,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        lambda: vec![],
    })
}

/// Kronecker PCA with nuclear-norm shrinkage `λ/2` on the rearranged
/// spectrum. Factors are reported only when exactly one term survives.
pub fn kpca(stats: &SampleStats, lambda: f64, max_rank: Option<usize>) -> Result<FitResult> {
    check_lambda(lambda)?;
    let start = Instant::now();
    let (spec, d1, d2) = spectrum_of(stats, lambda / 2.0, max_rank.unwrap_or(usize::MAX))?;
    let terms = shrink(&spec, d1, d2, lambda, max_rank);
    let factors = if terms.rank() == 1 {
        let (a, b) = &terms.terms[0];
        Some(FactorSet::new(vec![(b + b.transpose()) * 0.5, (a + a.transpose()) * 0.5])?)
    } else {
        None
    };
    Ok(FitResult {
        method: Method::Kpca,
        model: Model::KronTerms(terms),
        factors,
        objective_trace: vec![kpca_objective(&spec, lambda, max_rank)],
        iterations: 1,
        converged: true,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        lambda: vec![lambda],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use mwcov_core::Tensor;

    fn toy() -> Vec<Tensor> {
        (0..7)
            .map(|n| Tensor::from_fn(vec![3, 2], |i| (((n * 5 + i[0] * 7 + i[1] * 3) % 13) as f64 - 6.0) * 0.3 + (n as f64).sin()).unwrap())
            .collect()
    }

    #[test]
    fn data_route_matches_dense_route() {
        let stats = SampleStats::from_data(&toy(), true).unwrap();
        let s = stats.covariance(100).unwrap();
        let cov = SampleStats::from_cov(s.clone(), &[3, 2]).unwrap();
        for lambda in [0.0, 0.2] {
            let a = kpca(&stats, lambda, None).unwrap().model.materialize().unwrap();
            let b = kpca(&cov, lambda, None).unwrap().model.materialize().unwrap();
            assert!((&a - &b).amax() < 1e-9, "{}", (&a - &b).amax());
        }
        let a = kpca(&stats, 0.0, None).unwrap().model.materialize().unwrap();
        assert!((a - s).amax() < 1e-9);
        // transposed layout exercises the other Gram side
        let t: Vec<Tensor> = toy().into_iter().map(|x| Tensor::new(vec![2, 3], x.unfold(1).unwrap().as_slice().to_vec()).unwrap()).collect();
        let st = SampleStats::from_data(&t, true).unwrap();
        let dense = SampleStats::from_cov(st.covariance(100).unwrap(), &[2, 3]).unwrap();
        let a = kp_ls(&st).unwrap().model.materialize().unwrap();
        let b = kp_ls(&dense).unwrap().model.materialize().unwrap();
        assert!((a - b).amax() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(kpca_terms(&DMatrix::identity(5, 5), 2, 3, 0.0, None).is_err());
        assert!(kpca_terms(&DMatrix::identity(6, 6), 2, 3, -1.0, None).is_err());
    }
}

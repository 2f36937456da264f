//! Sylvester graphical model `Ω = (⊕_k A_k)²` fit by block proximal
//! linearized minimization of the penalized negative log-pseudolikelihood
//! `tr(S Ω) - Σ_tuples log(Σ_k diag(A_k)[i_k]) + Σ_k λ_k ‖A_k‖`.

use std::time::Instant;

use mwcov_core::{DMatrix, StructuredMatrix, Tensor};

use crate::common::{check_order, factor_set, initial_factors, l1, log_kron_sum_diag, reciprocal_tuple_sums, relative_change, soft_threshold};
use crate::config::{EstimatorConfig, Method};
use crate::error::{EstError, Result};
use crate::result::{FitResult, Model};
use crate::stats::SampleStats;

pub const DIAGONAL_FLOOR: f64 = 1e-8;
const INITIAL_STEP: f64 = 1.0;
const SHRINK: f64 = 0.5;
const SUFFICIENT_DECREASE: f64 = 1e-4;
const MAX_HALVINGS: usize = 50;

fn diagonals(a: &[DMatrix<f64>]) -> Vec<Vec<f64>> {
    a.iter().map(|m| m.diagonal().iter().copied().collect()).collect()
}

/// Action of `Σ_{j ∈ modes} (A_j on mode j)` on a tensor.
fn partial_kron_sum<'a>(a: &'a [DMatrix<f64>], skip: Option<usize>) -> impl Fn(&Tensor) -> Result<Tensor> + 'a {
    move |t: &Tensor| {
        let mut out = Tensor::zeros(t.dims().to_vec())?;
        for (j, m) in a.iter().enumerate() {
            if Some(j) != skip {
                out.axpy(1.0, &t.mode_product(m, j)?);
            }
        }
        Ok(out)
    }
}

/// Smooth part `tr(S(⊕A)²) - Σ log(diag sums)`; `None` if a diagonal
/// tuple sum is not positive.
pub fn sg_palm_smooth(stats: &SampleStats, a: &[DMatrix<f64>]) -> Result<Option<f64>> {
    let Some(logterm) = log_kron_sum_diag(&diagonals(a)) else {
        return Ok(None);
    };
    let psi = partial_kron_sum(a, None);
    Ok(Some(stats.trace_squared(&psi)? - logterm))
}

/// Gradient of [`sg_palm_smooth`] with respect to each (symmetric) factor:
/// `P_k A_k + A_k P_k + partial_trace_k(S R_k + R_k S) - diag(c_k)` with
/// `R_k` the Kronecker sum without mode `k`.
pub fn sg_palm_gradient(stats: &SampleStats, a: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    let diags = diagonals(a);
    (0..a.len())
        .map(|k| {
            let p = stats.mode_scatter(k)?;
            let q = stats.sym_cross(k, &partial_kron_sum(a, Some(k)))?;
            Ok(block_gradient(&p, &q, &a[k], &reciprocal_tuple_sums(&diags, k)))
        })
        .collect()
}

fn block_gradient(p: &DMatrix<f64>, q: &DMatrix<f64>, a: &DMatrix<f64>, c: &[f64]) -> DMatrix<f64> {
    let mut g = p * a + a * p + q;
    for (i, ci) in c.iter().enumerate() {
        g[(i, i)] -= ci;
    }
    g
}

/// Block objective in `A_k` up to a constant: `⟨P, A²⟩ + ⟨Q, A⟩ - log term +
/// penalty`; `None` when the diagonal leaves the domain.
fn block_objective(p: &DMatrix<f64>, q: &DMatrix<f64>, a: &DMatrix<f64>, k: usize, diags: &mut [Vec<f64>], lambda: f64, pen_diag: bool) -> Option<f64> {
    let saved = std::mem::replace(&mut diags[k], a.diagonal().iter().copied().collect());
    let logterm = log_kron_sum_diag(diags);
    diags[k] = saved;
    Some(p.dot(&(a * a)) + q.dot(a) - logterm? + lambda * l1(a, pen_diag))
}

pub fn sg_palm(stats: &SampleStats, cfg: &EstimatorConfig) -> Result<FitResult> {
    cfg.validate()?;
    check_order(stats)?;
    let start = Instant::now();
    let order = stats.order();
    let lambdas = cfg.lambdas(order)?;
    let pen_diag = cfg.penalize_diagonal;
    let deadline = cfg.deadline();
    let scatters: Vec<DMatrix<f64>> = (0..order).map(|m| stats.mode_scatter(m)).collect::<Result<_>>()?;
    let mut a = initial_factors(stats, Method::SgPalm, &cfg.init)?;
    if a.iter().any(|m| m.diagonal().min() <= DIAGONAL_FLOOR) {
        return Err(EstError::DiagonalCollapse(DIAGONAL_FLOOR));
    }
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut f_prev: Option<f64> = None;
    while iterations < cfg.max_iter {
        iterations += 1;
        for k in 0..order {
            let p = &scatters[k];
            let q = stats.sym_cross(k, &partial_kron_sum(&a, Some(k)))?;
            let mut diags = diagonals(&a);
            let c = reciprocal_tuple_sums(&diags, k);
            let g = block_gradient(p, &q, &a[k], &c);
            let f0 = block_objective(p, &q, &a[k], k, &mut diags, lambdas[k], pen_diag).ok_or(EstError::DiagonalCollapse(DIAGONAL_FLOOR))?;
            let mut eta = INITIAL_STEP;
            let mut next = None;
            let mut collapsed = true;
            for _ in 0..=MAX_HALVINGS {
                let cand = soft_threshold(&(&a[k] - &g * eta), eta * lambdas[k], pen_diag);
                let cand = (&cand + cand.transpose()) * 0.5;
                if cand.diagonal().min() > DIAGONAL_FLOOR {
                    collapsed = false;
                    if let Some(f1) = block_objective(p, &q, &cand, k, &mut diags, lambdas[k], pen_diag) {
                        let moved = (&cand - &a[k]).norm_squared();
                        if f1 <= f0 - SUFFICIENT_DECREASE / eta * moved {
                            next = Some(cand);
                            break;
                        }
                    }
                }
                eta *= SHRINK;
            }
            match next {
                Some(cand) => a[k] = cand,
                None if collapsed => return Err(EstError::DiagonalCollapse(DIAGONAL_FLOOR)),
                None => return Err(EstError::LineSearch(MAX_HALVINGS)),
            }
        }
        let smooth = sg_palm_smooth(stats, &a)?.ok_or(EstError::DiagonalCollapse(DIAGONAL_FLOOR))?;
        let f = smooth + a.iter().zip(&lambdas).map(|(m, l)| l * l1(m, pen_diag)).sum::<f64>();
        trace.push(f);
        let done = f_prev.is_some_and(|p| relative_change(p, f) <= cfg.tol);
        f_prev = Some(f);
        if done {
            converged = true;
            break;
        }
        if deadline.is_some_and(|d| Instant::now() > d) {
            break;
        }
    }
    let factors = factor_set(&a)?;
    Ok(FitResult {
        method: Method::SgPalm,
        model: Model::Structured(StructuredMatrix::squared_kron_sum(factors.clone())),
        factors: Some(factors),
        objective_trace: trace,
        iterations,
        converged,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        lambda: lambdas,
    })
}

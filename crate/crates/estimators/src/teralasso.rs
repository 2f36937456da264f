//! Kronecker-sum precision `Ω = ⊕_k Ψ_k` by proximal gradient on the convex
//! penalized likelihood. The log-determinant and the partial traces of
//! `Ω⁻¹` come from per-factor eigendecompositions.

use std::time::Instant;

use mwcov_core::{DMatrix, EigKronSum, FactorSet, StructuredMatrix};

use crate::common::{check_order, factor_set, initial_factors, inner, l1, relative_change, soft_threshold};
use crate::config::{EstimatorConfig, Method};
use crate::error::{EstError, Result};
use crate::result::{FitResult, Model};
use crate::stats::SampleStats;

const MAX_BACKTRACK: usize = 60;

/// Smooth part `Σ_k ⟨P_k, Ψ_k⟩ - log det(⊕Ψ)` given the mode scatters
/// `P_k = partial_trace_k(S)`; `None` outside the positive definite cone.
pub fn teralasso_smooth(scatters: &[DMatrix<f64>], psi: &[DMatrix<f64>]) -> Result<Option<f64>> {
    let e = EigKronSum::new(&factor_set(psi)?)?;
    if !e.is_positive_definite() {
        return Ok(None);
    }
    Ok(Some(inner(scatters, psi) - e.logdet()?))
}

/// Gradient of [`teralasso_smooth`]: `P_k - partial_trace_k((⊕Ψ)⁻¹)`.
pub fn teralasso_gradient(scatters: &[DMatrix<f64>], psi: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    let e = EigKronSum::new(&factor_set(psi)?)?;
    let inv = e.inverse_partial_traces()?;
    Ok(scatters.iter().zip(inv).map(|(p, q)| p - q).collect())
}

/// Shifts factor diagonals so every factor has the same mean diagonal,
/// leaving `⊕Ψ` unchanged.
pub fn balance_traces(psi: &mut [DMatrix<f64>]) {
    let taus: Vec<f64> = psi.iter().map(|p| p.trace() / p.nrows() as f64).collect();
    let mean = taus.iter().sum::<f64>() / taus.len() as f64;
    for (p, tau) in psi.iter_mut().zip(taus) {
        for i in 0..p.nrows() {
            p[(i, i)] += mean - tau;
        }
    }
}

fn penalty(psi: &[DMatrix<f64>], lambdas: &[f64]) -> f64 {
    psi.iter().zip(lambdas).map(|(p, l)| l * l1(p, false)).sum()
}

pub fn teralasso(stats: &SampleStats, cfg: &EstimatorConfig) -> Result<FitResult> {
    cfg.validate()?;
    check_order(stats)?;
    let start = Instant::now();
    let k = stats.order();
    let lambdas = cfg.lambdas(k)?;
    if cfg.penalize_diagonal {
        log::warn!("teralasso penalizes off-diagonals only; penalize_diagonal ignored");
    }
    let deadline = cfg.deadline();
    let scatters: Vec<DMatrix<f64>> = (0..k).map(|m| stats.mode_scatter(m)).collect::<Result<_>>()?;
    let mut psi = initial_factors(stats, Method::TeraLasso, &cfg.init)?;
    balance_traces(&mut psi);
    let mut smooth = teralasso_smooth(&scatters, &psi)?.ok_or(EstError::LostDefiniteness)?;
    let mut grad = teralasso_gradient(&scatters, &psi)?;
    let e0 = EigKronSum::new(&factor_set(&psi)?)?;
    let mut eta = e0.min_eigenvalue().powi(2);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut f_prev = smooth + penalty(&psi, &lambdas);
    while iterations < cfg.max_iter {
        iterations += 1;
        let mut accepted = None;
        let mut any_pd = false;
        for _ in 0..MAX_BACKTRACK {
            let cand: Vec<DMatrix<f64>> = psi
                .iter()
                .zip(&grad)
                .zip(&lambdas)
                .map(|((p, g), &l)| soft_threshold(&(p - g * eta), eta * l, false))
                .collect();
            if let Some(fs) = teralasso_smooth(&scatters, &cand)? {
                any_pd = true;
                let delta: Vec<DMatrix<f64>> = cand.iter().zip(&psi).map(|(c, p)| c - p).collect();
                let bound = smooth + inner(&grad, &delta) + inner(&delta, &delta) / (2.0 * eta);
                if fs <= bound + 1e-12 * smooth.abs().max(1.0) {
                    accepted = Some((cand, fs, delta));
                    break;
                }
            }
            eta *= 0.5;
        }
        let Some((mut cand, fs, delta)) = accepted else {
            return Err(if any_pd { EstError::LineSearch(MAX_BACKTRACK) } else { EstError::LostDefiniteness });
        };
        balance_traces(&mut cand);
        let new_grad = teralasso_gradient(&scatters, &cand)?;
        // Barzilai-Borwein guess for the next step
        let dg: Vec<DMatrix<f64>> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = inner(&delta, &dg);
        let ss = inner(&delta, &delta);
        eta = if sy > 0.0 && ss > 0.0 { ss / sy } else { eta * 2.0 };
        psi = cand;
        smooth = fs;
        grad = new_grad;
        let f = smooth + penalty(&psi, &lambdas);
        trace.push(f);
        let done = relative_change(f_prev, f) <= cfg.tol;
        f_prev = f;
        if done {
            converged = true;
            break;
        }
        if deadline.is_some_and(|d| Instant::now() > d) {
            break;
        }
    }
    let factors: FactorSet = factor_set(&psi)?;
    Ok(FitResult {
        method: Method::TeraLasso,
        model: Model::Structured(StructuredMatrix::kron_sum(factors.clone())),
        factors: Some(factors),
        objective_trace: trace,
        iterations,
        converged,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        lambda: lambdas,
    })
}

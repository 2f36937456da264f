//! Penalized objectives evaluated on a fitted model, independent of the
//! solvers' internal bookkeeping.

use mwcov_core::linalg::logdet_spd;
use mwcov_core::{CoreError, DMatrix, EigKronSum, FactorSet, Structure, StructuredMatrix};

use crate::common::{l1, log_kron_sum_diag};
use crate::config::Method;
use crate::error::{EstError, Result};
use crate::glasso::glasso_objective;
use crate::result::Model;
use crate::stats::SampleStats;

fn check_dims(stats: &SampleStats, fs: &FactorSet) -> Result<()> {
    if fs.dims() != stats.dims() {
        return Err(CoreError::DimensionMismatch(format!("factor dims {:?} vs data dims {:?}", fs.dims(), stats.dims())).into());
    }
    Ok(())
}

/// `tr(S ⊗Ω_k) - Σ_k (d/d_k) log det Ω_k + Σ_k (d/d_k) λ_k ‖Ω_k‖`.
pub fn tlasso_objective(stats: &SampleStats, fs: &FactorSet, lambdas: &[f64], pen_diag: bool) -> Result<f64> {
    check_dims(stats, fs)?;
    let d = stats.side() as f64;
    let mut f = stats.trace_with(&StructuredMatrix::kron_product(fs.clone()))?;
    for (om, l) in fs.factors().iter().zip(lambdas) {
        let w = d / om.nrows() as f64;
        f += w * (l * l1(om, pen_diag) - logdet_spd(om)?);
    }
    Ok(f)
}

/// `tr(S ⊕Ψ_k) - log det(⊕Ψ_k) + Σ_k λ_k ‖Ψ_k‖_off`.
pub fn teralasso_objective(stats: &SampleStats, fs: &FactorSet, lambdas: &[f64]) -> Result<f64> {
    check_dims(stats, fs)?;
    let tr = stats.trace_with(&StructuredMatrix::kron_sum(fs.clone()))?;
    let logdet = EigKronSum::new(fs)?.logdet()?;
    Ok(tr - logdet + fs.factors().iter().zip(lambdas).map(|(p, l)| l * l1(p, false)).sum::<f64>())
}

/// `tr(S (⊕A_k)²) - Σ log(diag sums) + Σ_k λ_k ‖A_k‖`.
pub fn sg_palm_objective(stats: &SampleStats, fs: &FactorSet, lambdas: &[f64], pen_diag: bool) -> Result<f64> {
    check_dims(stats, fs)?;
    let diags: Vec<Vec<f64>> = fs.factors().iter().map(|m| m.diagonal().iter().copied().collect()).collect();
    let logterm = log_kron_sum_diag(&diags).ok_or(CoreError::NotPositiveDefinite)?;
    let ks = StructuredMatrix::kron_sum(fs.clone());
    let tr = stats.trace_squared(&|t| Ok(ks.apply_tensor(t)?))?;
    Ok(tr - logterm + fs.factors().iter().zip(lambdas).map(|(a, l)| l * l1(a, pen_diag)).sum::<f64>())
}

/// Objective of `method` at `model`. Glasso needs a dense model and
/// statistics small enough to materialize `S`.
pub fn objective(method: Method, model: &Model, stats: &SampleStats, lambdas: &[f64], pen_diag: bool) -> Result<f64> {
    let mismatch = || EstError::Config(format!("model structure does not match method {method}"));
    let structured = match model {
        Model::Structured(s) => s,
        Model::KronTerms(_) => return Err(EstError::Config(format!("no objective evaluator for a Kronecker-term model under {method}"))),
    };
    let lambdas = match lambdas.len() {
        1 => vec![lambdas[0]; stats.order()],
        _ => lambdas.to_vec(),
    };
    match (method, structured.structure()) {
        (Method::Tlasso, Structure::KronProduct) => tlasso_objective(stats, structured.factors().ok_or_else(mismatch)?, &lambdas, pen_diag),
        (Method::TeraLasso, Structure::KronSum) => teralasso_objective(stats, structured.factors().ok_or_else(mismatch)?, &lambdas),
        (Method::SgPalm, Structure::SquaredKronSum) => sg_palm_objective(stats, structured.factors().ok_or_else(mismatch)?, &lambdas, pen_diag),
        (Method::Glasso, Structure::Dense) => {
            let theta: &DMatrix<f64> = structured.dense_matrix().ok_or_else(mismatch)?;
            glasso_objective(&stats.covariance(usize::MAX)?, theta, lambdas[0], pen_diag)
        }
        _ => Err(mismatch()),
    }
}

//! Matrix and prediction error metrics.

use mwcov_core::{DMatrix, DVector};
use mwcov_estimators::Model;

use crate::error::{EvalError, Result};

/// Floor reported in place of `log 0` for exact recovery.
pub const LOG_ERROR_FLOOR: f64 = -30.0;

fn clamp_log(ratio: f64) -> f64 {
    if ratio <= 0.0 {
        LOG_ERROR_FLOOR
    } else {
        ratio.ln().max(LOG_ERROR_FLOOR)
    }
}

/// `log(‖est - truth‖_F / ‖truth‖_F)`, clamped below at [`LOG_ERROR_FLOOR`].
pub fn frob_error(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    if est.shape() != truth.shape() {
        return Err(EvalError::Dimension(format!("{:?} vs {:?}", est.shape(), truth.shape())));
    }
    let tn = truth.norm();
    if tn == 0.0 {
        return Err(EvalError::ZeroTruth);
    }
    Ok(clamp_log((est - truth).norm() / tn))
}

/// [`frob_error`] accumulated one column at a time, so neither matrix is
/// ever held in full.
pub fn frob_error_columns(side: usize, est: &dyn Fn(usize) -> Result<DVector<f64>>, truth: &dyn Fn(usize) -> Result<DVector<f64>>) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..side {
        let (e, t) = (est(j)?, truth(j)?);
        if e.len() != side || t.len() != side {
            return Err(EvalError::Dimension(format!("column {j} lengths {} and {} for side {side}", e.len(), t.len())));
        }
        num += (e - &t).norm_squared();
        den += t.norm_squared();
    }
    if den == 0.0 {
        return Err(EvalError::ZeroTruth);
    }
    Ok(clamp_log((num / den).sqrt()))
}

/// [`frob_error`] of a fitted model against a columnwise reference.
pub fn frob_error_model(model: &Model, truth: &dyn Fn(usize) -> Result<DVector<f64>>) -> Result<f64> {
    frob_error_columns(model.side(), &|j| Ok(model.column(j)?), truth)
}

/// Root mean squared error divided by the range of `truth`.
pub fn nrmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() || truth.is_empty() {
        return Err(EvalError::Dimension(format!("lengths {} and {}", pred.len(), truth.len())));
    }
    let max = truth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = truth.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    if !(range > 0.0) {
        return Err(EvalError::ConstantTruth);
    }
    let mse = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / truth.len() as f64;
    Ok(mse.sqrt() / range)
}

/// Mean of the per-sample [`nrmse`] values; each test sample pools all of
/// its entries.
pub fn mean_nrmse(preds: &[Vec<f64>], truths: &[Vec<f64>]) -> Result<f64> {
    if preds.len() != truths.len() || preds.is_empty() {
        return Err(EvalError::Dimension(format!("{} predictions for {} targets", preds.len(), truths.len())));
    }
    let mut acc = 0.0;
    for (p, t) in preds.iter().zip(truths) {
        acc += nrmse(p, t)?;
    }
    Ok(acc / preds.len() as f64)
}

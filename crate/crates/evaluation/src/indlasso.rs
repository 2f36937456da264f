//! Independent lasso regressions, one per output coordinate, as a
//! structure-free forecasting baseline.

use mwcov_core::{DMatrix, DVector};

use crate::error::{EvalError, Result};

const MAX_SWEEPS: usize = 100_000;
pub const KKT_TOL: f64 = 1e-6;

/// `(1/2n)‖y - Xβ‖² + λ‖β‖₁`.
pub fn lasso_objective(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> f64 {
    let r = y - x * beta;
    r.norm_squared() / (2.0 * x.nrows() as f64) + lambda * beta.lp_norm(1)
}

/// Largest violation of `(1/n) Xᵀ(y - Xβ) ∈ λ ∂‖β‖₁`.
pub fn lasso_kkt(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> f64 {
    let g = x.transpose() * (y - x * beta) / x.nrows() as f64;
    g.iter()
        .zip(beta.iter())
        .map(|(&gj, &bj)| if bj != 0.0 { (gj - lambda * bj.signum()).abs() } else { (gj.abs() - lambda).max(0.0) })
        .fold(0.0, f64::max)
}

/// Cyclic coordinate descent until the KKT residual is at most `tol`.
pub fn lasso_cd(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, tol: f64) -> DVector<f64> {
    let (n, m) = x.shape();
    let nf = n as f64;
    let col_sq: Vec<f64> = (0..m).map(|j| x.column(j).norm_squared() / nf).collect();
    let mut beta = DVector::<f64>::zeros(m);
    let mut r = y.clone();
    for _ in 0..MAX_SWEEPS {
        for j in 0..m {
            if col_sq[j] == 0.0 {
                continue;
            }
            let xj = x.column(j);
            let rho = xj.dot(&r) / nf + col_sq[j] * beta[j];
            let new = rho.signum() * (rho.abs() - lambda).max(0.0) / col_sq[j];
            let delta = new - beta[j];
            if delta != 0.0 {
                r.axpy(-delta, &xj, 1.0);
                beta[j] = new;
            }
        }
        if lasso_kkt(x, y, &beta, lambda) <= tol {
            break;
        }
    }
    beta
}

/// Linear map from a history vector to a forecast, one lasso per output.
#[derive(Debug, Clone, PartialEq)]
pub struct IndLasso {
    /// `outputs x features`.
    pub coef: DMatrix<f64>,
    pub lambda: f64,
}

impl IndLasso {
    /// Rows of `histories` and `targets` are training samples.
    pub fn fit(histories: &DMatrix<f64>, targets: &DMatrix<f64>, lambda: f64) -> Result<Self> {
        if histories.nrows() < 2 {
            return Err(EvalError::TooFewSamples { need: 2, got: histories.nrows() });
        }
        if histories.nrows() != targets.nrows() {
            return Err(EvalError::Dimension(format!("{} histories for {} targets", histories.nrows(), targets.nrows())));
        }
        if !(lambda >= 0.0) {
            return Err(EvalError::Dimension(format!("penalty {lambda} must be non-negative")));
        }
        let mut coef = DMatrix::zeros(targets.ncols(), histories.ncols());
        for o in 0..targets.ncols() {
            let y = targets.column(o).into_owned();
            let beta = lasso_cd(histories, &y, lambda, KKT_TOL);
            coef.row_mut(o).copy_from(&beta.transpose());
        }
        Ok(Self { coef, lambda })
    }

    pub fn predict(&self, history: &[f64]) -> Result<DVector<f64>> {
        if history.len() != self.coef.ncols() {
            return Err(EvalError::Dimension(format!("history of length {} for {} features", history.len(), self.coef.ncols())));
        }
        Ok(&self.coef * DVector::from_column_slice(history))
    }
}

//! Single-cell work: generate a replicate, fit one method over its penalty
//! grid, and score the selected fit.

use std::time::Instant;

use mwcov_core::structured::DEFAULT_DENSE_CAP;
use mwcov_core::{DMatrix, DVector, FactorSet, StructuredMatrix, Tensor};
use mwcov_estimators::{fit as fit_estimator, lambda_from_rate, EstimatorConfig, FitResult, Method, Model, SampleStats};
use mwcov_evaluation::{frob_error_columns, EvalError, mcc, FrameOrder, IndLasso, Mcc, PredictorBlocks, SupportPattern, DEFAULT_SUPPORT_THRESHOLD};
use mwcov_generators::{build, sample_process, GroundTruth, ProcessSpec};
use nalgebra::Cholesky;

use crate::error::{HarnessError, Result};
use crate::spec::{Algo, Metric, MethodSpec, PredictionSpec};

/// Ground truth and `n` seeded realizations of the process.
pub fn generate(process: &ProcessSpec, n: usize, seed: u64) -> Result<(GroundTruth, Vec<Tensor>)> {
    let spec = process.clone().with_seed(seed);
    let gt = build(&spec)?;
    let data = sample_process(&gt, n, spec.params.sigma_w, seed)?;
    Ok((gt, data))
}

/// A fitted precision: either structured or an explicit dense inverse of a
/// fitted covariance.
pub enum Precision {
    Model(Model),
    Dense(DMatrix<f64>),
}

impl Precision {
    pub fn side(&self) -> usize {
        match self {
            Precision::Model(m) => m.side(),
            Precision::Dense(d) => d.nrows(),
        }
    }

    pub fn column(&self, j: usize) -> Result<DVector<f64>> {
        match self {
            Precision::Model(m) => Ok(m.column(j)?),
            Precision::Dense(d) => Ok(d.column(j).into_owned()),
        }
    }

    pub fn dense(&self, cap: usize) -> Result<DMatrix<f64>> {
        match self {
            Precision::Model(m) => Ok(m.materialize_capped(cap)?),
            Precision::Dense(d) => Ok(d.clone()),
        }
    }
}

fn inverse_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    Cholesky::new(sym)
        .map(|c| c.inverse())
        .ok_or_else(|| HarnessError::Spec("fitted covariance is not positive definite".into()))
}

/// The precision implied by a fit. Covariance fits are inverted: factor by
/// factor for a single Kronecker product, densely otherwise.
pub fn precision_of(fit: &FitResult) -> Result<Precision> {
    if fit.method.estimates_precision() {
        return Ok(Precision::Model(fit.model.clone()));
    }
    if let Some(fs) = &fit.factors {
        let inv: Vec<DMatrix<f64>> = fs.factors().iter().map(inverse_spd).collect::<Result<_>>()?;
        return Ok(Precision::Model(Model::Structured(StructuredMatrix::kron_product(FactorSet::new(inv)?))));
    }
    Ok(Precision::Dense(inverse_spd(&fit.model.materialize_capped(DEFAULT_DENSE_CAP)?)?))
}

pub fn fnorm(est: &Precision, gt: &GroundTruth) -> Result<f64> {
    let est_col = |j| est.column(j).map_err(|e| EvalError::Dimension(e.to_string()));
    Ok(frob_error_columns(est.side(), &est_col, &|j| Ok(gt.precision_column(j)))?)
}

pub fn support_mcc(est: &Precision, gt: &GroundTruth) -> Result<Mcc> {
    let d = est.side();
    let mut pairs = Vec::new();
    for j in 0..d {
        let c = est.column(j)?;
        pairs.extend((0..j).filter(|&i| c[i].abs() > DEFAULT_SUPPORT_THRESHOLD).map(|i| (i, j)));
    }
    let est_s = SupportPattern::from_pairs(d, pairs, DEFAULT_SUPPORT_THRESHOLD)?;
    let truth = SupportPattern::from_pairs(d, gt.support(), 0.0)?;
    Ok(mcc(&est_s, &truth)?)
}

/// Penalty candidates `(C, λ)` for a method at the given data shape.
pub fn candidates(ms: &MethodSpec, dims: &[usize], n: usize) -> Result<Vec<(Option<f64>, Vec<f64>)>> {
    let method = match ms.method {
        Algo::Estimator(m) => m,
        Algo::IndLasso => {
            let features = (dims.iter().product::<usize>() as f64).max(2.0);
            return Ok(match &ms.lambda {
                Some(l) => vec![(None, l.clone())],
                None => ms.c_grid.iter().map(|&c| (Some(c), vec![c * (features.ln() / n as f64).sqrt()])).collect(),
            });
        }
    };
    if method == Method::KpLs {
        return Ok(vec![(None, vec![0.0])]);
    }
    Ok(match &ms.lambda {
        Some(l) => vec![(None, l.clone())],
        None => ms
            .c_grid
            .iter()
            .map(|&c| Ok((Some(c), lambda_from_rate(method, dims, n, c)?)))
            .collect::<Result<_>>()?,
    })
}

pub fn estimator_config(ms: &MethodSpec, lambda: Vec<f64>) -> EstimatorConfig {
    EstimatorConfig {
        tol: ms.tol,
        max_iter: ms.max_iter,
        time_limit: ms.time_limit,
        ..EstimatorConfig::with_lambda(lambda)
    }
}

pub fn fit_once(ms: &MethodSpec, method: Method, stats: &SampleStats, lambda: Vec<f64>) -> Result<FitResult> {
    Ok(fit_estimator(method, stats, &estimator_config(ms, lambda), ms.max_rank)?)
}

/// What a cell reports for its selected penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub c_used: Option<f64>,
    pub lambda_used: Vec<f64>,
    pub wall_time_seconds: f64,
    pub iterations: usize,
    pub converged: bool,
    pub values: Vec<(Metric, f64)>,
}

fn check_glasso_cap(ms: &MethodSpec, side: usize, cap: usize) -> Result<()> {
    if ms.method == Algo::Estimator(Method::Glasso) && side > cap {
        return Err(HarnessError::Censored(format!("censored: glasso at side {side} exceeds the cap of {cap}")));
    }
    Ok(())
}

/// Fits every penalty candidate, keeps the one with the smallest
/// Frobenius error against the truth, and evaluates `metrics` on it.
pub fn estimation_cell(ms: &MethodSpec, gt: &GroundTruth, data: &[Tensor], metrics: &[Metric], glasso_cap: usize) -> Result<CellOutcome> {
    let Algo::Estimator(method) = ms.method else {
        return Err(HarnessError::Spec("ind-lasso has no precision estimate".into()));
    };
    check_glasso_cap(ms, gt.side(), glasso_cap)?;
    let stats = SampleStats::from_data(data, true)?;
    let mut best: Option<(f64, Option<f64>, FitResult, Precision)> = None;
    let mut last_err = None;
    for (c, lambda) in candidates(ms, stats.dims(), data.len())? {
        let scored = fit_once(ms, method, &stats, lambda).and_then(|fit| {
            let prec = precision_of(&fit)?;
            let f = fnorm(&prec, gt)?;
            Ok((f, fit, prec))
        });
        match scored {
            Ok((f, fit, prec)) => {
                log::debug!("{method} C={c:?}: fnorm {f:.4}");
                if best.as_ref().is_none_or(|b| f < b.0) {
                    best = Some((f, c, fit, prec));
                }
            }
            Err(e) => {
                log::warn!("{method} C={c:?} failed: {e}");
                last_err = Some(e);
            }
        }
    }
    let Some((f, c, fit, prec)) = best else {
        return Err(last_err.unwrap_or_else(|| HarnessError::Spec("no penalty candidates".into())));
    };
    let mut values = Vec::new();
    for &m in metrics {
        let v = match m {
            Metric::Fnorm => f,
            Metric::Mcc => support_mcc(&prec, gt)?.value,
            Metric::Runtime => fit.wall_time_seconds,
            Metric::Nrmse => return Err(HarnessError::Spec("nrmse needs a prediction study".into())),
        };
        values.push((m, v));
    }
    Ok(CellOutcome {
        c_used: c,
        lambda_used: fit.lambda.clone(),
        wall_time_seconds: fit.wall_time_seconds,
        iterations: fit.iterations,
        converged: fit.converged,
        values,
    })
}

/// All windows of `p` consecutive frames; time is the last mode.
pub fn windows(trajectories: &[Tensor], p: usize) -> Result<Vec<Tensor>> {
    let mut out = Vec::new();
    for x in trajectories {
        let dims = x.dims();
        let t = *dims.last().expect("tensor has modes");
        let frame: usize = dims[..dims.len() - 1].iter().product();
        let mut wdims = dims.to_vec();
        *wdims.last_mut().unwrap() = p;
        for s in 0..=t.saturating_sub(p) {
            if s + p > t {
                break;
            }
            out.push(Tensor::new(wdims.clone(), x.as_slice()[s * frame..(s + p) * frame].to_vec())?);
        }
    }
    Ok(out)
}

/// `(history, last frame)` pairs of each window.
fn split_windows(ws: &[Tensor], p: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    ws.iter()
        .map(|w| {
            let q = w.len() / p;
            let h = (p - 1) * q;
            (w.as_slice()[..h].to_vec(), w.as_slice()[h..].to_vec())
        })
        .unzip()
}

enum Forecaster {
    Blocks(PredictorBlocks),
    Lasso(IndLasso),
}

impl Forecaster {
    fn predict(&self, history: &[f64]) -> Result<Vec<f64>> {
        Ok(match self {
            Forecaster::Blocks(b) => b.predict(history)?,
            Forecaster::Lasso(l) => l.predict(history)?,
        }
        .as_slice()
        .to_vec())
    }

    fn score(&self, ws: &[Tensor], p: usize) -> Result<f64> {
        let (hist, target) = split_windows(ws, p);
        let preds = hist.iter().map(|h| self.predict(h)).collect::<Result<Vec<_>>>()?;
        Ok(mwcov_evaluation::mean_nrmse(&preds, &target)?)
    }
}

/// Fits a forecaster on training windows; returns it with fit statistics.
fn train(ms: &MethodSpec, ws: &[Tensor], p: usize, lambda: Vec<f64>) -> Result<(Forecaster, f64, usize, bool, Vec<f64>)> {
    match ms.method {
        Algo::IndLasso => {
            let (hist, target) = split_windows(ws, p);
            let x = DMatrix::from_fn(hist.len(), hist[0].len(), |i, j| hist[i][j]);
            let y = DMatrix::from_fn(target.len(), target[0].len(), |i, j| target[i][j]);
            let start = Instant::now();
            let l = IndLasso::fit(&x, &y, lambda[0])?;
            Ok((Forecaster::Lasso(l), start.elapsed().as_secs_f64(), 1, true, lambda))
        }
        Algo::Estimator(method) => {
            let stats = SampleStats::from_data(ws, true)?;
            let fit = fit_once(ms, method, &stats, lambda)?;
            let prec = precision_of(&fit)?.dense(DEFAULT_DENSE_CAP)?;
            let q = stats.side() / p;
            let blocks = PredictorBlocks::new(&prec, p, q, FrameOrder::Slowest)?;
            Ok((Forecaster::Blocks(blocks), fit.wall_time_seconds, fit.iterations, fit.converged, fit.lambda))
        }
    }
}

/// Forecasting cell: the penalty is picked on validation trajectories, the
/// model is refit on all training trajectories and scored on the test ones.
pub fn prediction_cell(ms: &MethodSpec, data: &[Tensor], pred: &PredictionSpec, metrics: &[Metric], glasso_cap: usize) -> Result<CellOutcome> {
    let n = data.len();
    let n_test = ((pred.holdout_fraction * n as f64).ceil() as usize).clamp(1, n.saturating_sub(2).max(1));
    let n_train = n - n_test;
    let n_val = ((pred.validation_fraction * n_train as f64).ceil() as usize).clamp(1, n_train.saturating_sub(1).max(1));
    if n_train < 2 || n_train <= n_val {
        return Err(HarnessError::Spec(format!("{n} trajectories are too few to split")));
    }
    let p = pred.p;
    let fit_part = windows(&data[..n_train - n_val], p)?;
    let val = windows(&data[n_train - n_val..n_train], p)?;
    let train_all = windows(&data[..n_train], p)?;
    let test = windows(&data[n_train..], p)?;
    check_glasso_cap(ms, fit_part[0].len(), glasso_cap)?;
    let shape: Vec<usize> = match ms.method {
        Algo::IndLasso => vec![fit_part[0].len() / p * (p - 1)],
        Algo::Estimator(_) => fit_part[0].dims().to_vec(),
    };
    let mut best: Option<(f64, Option<f64>, Vec<f64>)> = None;
    let mut last_err = None;
    for (c, lambda) in candidates(ms, &shape, fit_part.len())? {
        match train(ms, &fit_part, p, lambda.clone()).and_then(|(f, ..)| f.score(&val, p)) {
            Ok(score) => {
                if best.as_ref().is_none_or(|b| score < b.0) {
                    best = Some((score, c, lambda));
                }
            }
            Err(e) => {
                log::warn!("{} C={c:?} failed: {e}", ms.method);
                last_err = Some(e);
            }
        }
    }
    let Some((_, c, lambda)) = best else {
        return Err(last_err.unwrap_or_else(|| HarnessError::Spec("no penalty candidates".into())));
    };
    // the rate rule is re-evaluated at the full training size
    let lambda = match c {
        Some(c) => candidates(&MethodSpec { c_grid: vec![c], ..ms.clone() }, &shape, train_all.len())?.remove(0).1,
        None => lambda,
    };
    let (model, wall, iterations, converged, lambda_used) = train(ms, &train_all, p, lambda)?;
    let mut values = Vec::new();
    for &m in metrics {
        let v = match m {
            Metric::Nrmse => model.score(&test, p)?,
            Metric::Runtime => wall,
            _ => return Err(HarnessError::Spec(format!("{m} is not reported by prediction studies"))),
        };
        values.push((m, v));
    }
    Ok(CellOutcome {
        c_used: c,
        lambda_used,
        wall_time_seconds: wall,
        iterations,
        converged,
        values,
    })
}

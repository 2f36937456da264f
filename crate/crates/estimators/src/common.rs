use mwcov_core::eig::kron_sum_spectrum;
use mwcov_core::{DMatrix, FactorSet};

use crate::config::{Init, Method};
use crate::error::{EstError, Result};
use crate::stats::SampleStats;

/// Entrywise soft-threshold by `t`, skipping the diagonal unless asked.
pub(crate) fn soft_threshold(m: &DMatrix<f64>, t: f64, include_diagonal: bool) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let x = m[(i, j)];
        if i == j && !include_diagonal {
            x
        } else {
            x.signum() * (x.abs() - t).max(0.0)
        }
    })
}

pub(crate) fn l1(m: &DMatrix<f64>, include_diagonal: bool) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j || include_diagonal {
                s += m[(i, j)].abs();
            }
        }
    }
    s
}

pub(crate) fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

pub(crate) fn relative_change(prev: f64, cur: f64) -> f64 {
    (prev - cur).abs() / prev.abs().max(cur.abs()).max(f64::MIN_POSITIVE)
}

/// `Σ_tuples log(Σ_k v_k[i_k])`; `None` if any tuple sum is not positive.
pub(crate) fn log_kron_sum_diag(diags: &[Vec<f64>]) -> Option<f64> {
    let vals: Vec<&[f64]> = diags.iter().map(|v| v.as_slice()).collect();
    let mut acc = 0.0;
    for s in kron_sum_spectrum(&vals) {
        if !(s > 0.0) {
            return None;
        }
        acc += s.ln();
    }
    Some(acc)
}

/// `c_k[i] = Σ_{tuples with i_k = i} 1 / (Σ_j v_j[i_j])`, the gradient of
/// [`log_kron_sum_diag`] with respect to `v_k`.
pub(crate) fn reciprocal_tuple_sums(diags: &[Vec<f64>], k: usize) -> Vec<f64> {
    let dims: Vec<usize> = diags.iter().map(|v| v.len()).collect();
    let vals: Vec<&[f64]> = diags.iter().map(|v| v.as_slice()).collect();
    let left: usize = dims[..k].iter().product();
    let mut c = vec![0.0; dims[k]];
    for (idx, s) in kron_sum_spectrum(&vals).into_iter().enumerate() {
        c[(idx / left) % dims[k]] += 1.0 / s;
    }
    c
}

pub(crate) fn check_order(stats: &SampleStats) -> Result<()> {
    if stats.order() < 2 {
        return Err(EstError::Config(format!("need at least two modes, got dims {:?}", stats.dims())));
    }
    Ok(())
}

/// Starting factors for the iterative structured estimators.
pub(crate) fn initial_factors(stats: &SampleStats, method: Method, init: &Init) -> Result<Vec<DMatrix<f64>>> {
    let dims = stats.dims().to_vec();
    let k = dims.len();
    match init {
        Init::Identity => Ok(dims.iter().map(|&n| DMatrix::identity(n, n)).collect()),
        Init::Warm(fs) => {
            if fs.dims() != dims {
                return Err(EstError::Config(format!("warm start dims {:?} vs data dims {dims:?}", fs.dims())));
            }
            Ok(fs.factors().to_vec())
        }
        Init::Diagonal => {
            let d = stats.side() as f64;
            let mut vars = Vec::with_capacity(k);
            let mut total = 0.0;
            for (m, &dm) in dims.iter().enumerate() {
                let pt = stats.mode_scatter(m)?;
                let scale = dm as f64 / d;
                total = pt.trace() / d;
                vars.push(pt.diagonal().map(|x| (x * scale).max(f64::MIN_POSITIVE)));
            }
            let total = total.max(f64::MIN_POSITIVE);
            let kf = k as f64;
            Ok(vars
                .iter()
                .enumerate()
                .map(|(m, v)| {
                    let diag = match method {
                        Method::Tlasso => {
                            let base = v.map(|x| total / x);
                            if m == k - 1 {
                                base / total
                            } else {
                                base
                            }
                        }
                        Method::SgPalm => v.map(|x| 1.0 / (kf * x.sqrt())),
                        _ => v.map(|x| 1.0 / (kf * x)),
                    };
                    DMatrix::from_diagonal(&diag)
                })
                .collect())
        }
    }
}

pub(crate) fn factor_set(factors: &[DMatrix<f64>]) -> Result<FactorSet> {
    Ok(FactorSet::new(factors.iter().map(|f| (f + f.transpose()) * 0.5).collect())?)
}

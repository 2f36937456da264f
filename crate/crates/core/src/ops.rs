//! Covariance-level operations: rearrangement, partial traces, sample
//! statistics.

use nalgebra::DMatrix;

use crate::error::{CoreError, Result};
use crate::linalg::{check_square, sym_sqrt};
use crate::structured::FactorSet;
use crate::tensor::{mode_split, Tensor};

/// Rearrangement `R`: maps a `d1 d2 x d1 d2` matrix to `d1^2 x d2^2` so that
/// `R(A ⊗ B) = vec(A) vec(B)^T` with `A` of side `d1` (Kronecker-left).
pub fn rearrange(s: &DMatrix<f64>, d1: usize, d2: usize) -> Result<DMatrix<f64>> {
    check_square(s, "rearrange input")?;
    if s.nrows() != d1 * d2 {
        return Err(CoreError::DimensionMismatch(format!(
            "side {} is not {d1} x {d2}",
            s.nrows()
        )));
    }
    let mut r = DMatrix::zeros(d1 * d1, d2 * d2);
    for j1 in 0..d1 {
        for i1 in 0..d1 {
            let row = i1 + d1 * j1;
            for j2 in 0..d2 {
                for i2 in 0..d2 {
                    r[(row, i2 + d2 * j2)] = s[(i1 * d2 + i2, j1 * d2 + j2)];
                }
            }
        }
    }
    Ok(r)
}

/// Inverse of [`rearrange`].
pub fn rearrange_inverse(m: &DMatrix<f64>, d1: usize, d2: usize) -> Result<DMatrix<f64>> {
    if m.nrows() != d1 * d1 || m.ncols() != d2 * d2 {
        return Err(CoreError::DimensionMismatch(format!(
            "{}x{} is not {}x{}",
            m.nrows(),
            m.ncols(),
            d1 * d1,
            d2 * d2
        )));
    }
    let mut s = DMatrix::zeros(d1 * d2, d1 * d2);
    for j1 in 0..d1 {
        for i1 in 0..d1 {
            let row = i1 + d1 * j1;
            for j2 in 0..d2 {
                for i2 in 0..d2 {
                    s[(i1 * d2 + i2, j1 * d2 + j2)] = m[(row, i2 + d2 * j2)];
                }
            }
        }
    }
    Ok(s)
}

/// Partial trace of a `d x d` matrix onto `mode`: the adjoint of embedding a
/// mode factor as `I ⊗ ... ⊗ A ⊗ ... ⊗ I` (colexicographic layout).
pub fn partial_trace(m: &DMatrix<f64>, mode: usize, dims: &[usize]) -> Result<DMatrix<f64>> {
    check_square(m, "partial trace input")?;
    if mode >= dims.len() {
        return Err(CoreError::ModeOutOfRange {
            mode,
            order: dims.len(),
        });
    }
    let d: usize = dims.iter().product();
    if m.nrows() != d {
        return Err(CoreError::DimensionMismatch(format!(
            "side {} does not match dims {dims:?}",
            m.nrows()
        )));
    }
    let (left, dk, right) = mode_split(dims, mode);
    let mut out = DMatrix::zeros(dk, dk);
    for b in 0..dk {
        for a in 0..dk {
            let mut acc = 0.0;
            for r in 0..right {
                for l in 0..left {
                    let base = l + left * dk * r;
                    acc += m[(base + left * a, base + left * b)];
                }
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

fn check_same_dims(data: &[Tensor]) -> Result<&[usize]> {
    let first = data.first().ok_or(CoreError::Empty("sample list"))?;
    for t in data {
        if t.dims() != first.dims() {
            return Err(CoreError::DimensionMismatch(format!(
                "heterogeneous sample dims {:?} vs {:?}",
                first.dims(),
                t.dims()
            )));
        }
    }
    Ok(first.dims())
}

pub fn sample_mean(data: &[Tensor]) -> Result<Tensor> {
    let dims = check_same_dims(data)?;
    let mut mean = Tensor::zeros(dims.to_vec())?;
    let w = 1.0 / data.len() as f64;
    for t in data {
        mean.axpy(w, t);
    }
    Ok(mean)
}

/// Subtracts the sample mean tensor from every sample.
pub fn center(data: &[Tensor]) -> Result<Vec<Tensor>> {
    let mean = sample_mean(data)?;
    Ok(data
        .iter()
        .map(|t| {
            let mut c = t.clone();
            c.axpy(-1.0, &mean);
            c
        })
        .collect())
}

/// `S = (1/N) Σ_n vec(x_n) vec(x_n)^T`, optionally after mean removal.
pub fn sample_covariance(data: &[Tensor], subtract_mean: bool) -> Result<DMatrix<f64>> {
    check_same_dims(data)?;
    let centered;
    let xs = if subtract_mean {
        centered = center(data)?;
        &centered
    } else {
        data
    };
    let d = xs[0].len();
    let n = xs.len();
    let mut x = DMatrix::zeros(d, n);
    for (j, t) in xs.iter().enumerate() {
        x.column_mut(j).copy_from_slice(t.as_slice());
    }
    let xt = x.transpose();
    let s = (&x * &xt) / n as f64;
    Ok((&s + s.transpose()) * 0.5)
}

/// Mode-`mode` sufficient statistic of the Kronecker-product likelihood,
/// `(d_k / (N d)) Σ_n V_n V_n^T` with `V_n` the mode unfolding of
/// `x_n` whitened by the square roots of the other modes' factors. No mean
/// is removed here.
pub fn mode_gram(data: &[Tensor], mode: usize, whiteners: Option<&FactorSet>) -> Result<DMatrix<f64>> {
    let dims = check_same_dims(data)?.to_vec();
    if mode >= dims.len() {
        return Err(CoreError::ModeOutOfRange {
            mode,
            order: dims.len(),
        });
    }
    let roots = match whiteners {
        None => None,
        Some(w) => {
            if w.dims() != dims {
                return Err(CoreError::DimensionMismatch(format!(
                    "whitener dims {:?} vs data dims {dims:?}",
                    w.dims()
                )));
            }
            let mut rs = Vec::with_capacity(dims.len());
            for (j, f) in w.factors().iter().enumerate() {
                rs.push(if j == mode { None } else { Some(sym_sqrt(f)?) });
            }
            Some(rs)
        }
    };
    let dk = dims[mode];
    let d: usize = dims.iter().product();
    let mut g = DMatrix::zeros(dk, dk);
    for x in data {
        let g_n = match &roots {
            None => x.mode_gram_raw(mode)?,
            Some(rs) => {
                let mut y = x.clone();
                for (j, r) in rs.iter().enumerate() {
                    if let Some(r) = r {
                        y = y.mode_product(r, j)?;
                    }
                }
                y.mode_gram_raw(mode)?
            }
        };
        g += g_n;
    }
    g *= dk as f64 / (data.len() as f64 * d as f64);
    Ok((&g + g.transpose()) * 0.5)
}

/// `partial_trace(S, mode)` computed from samples: `(1/N) Σ_n X_(k) X_(k)^T`.
pub fn mode_scatter(data: &[Tensor], mode: usize) -> Result<DMatrix<f64>> {
    let dims = check_same_dims(data)?;
    if mode >= dims.len() {
        return Err(CoreError::ModeOutOfRange {
            mode,
            order: dims.len(),
        });
    }
    let dk = dims[mode];
    let mut g = DMatrix::zeros(dk, dk);
    for x in data {
        g += x.mode_gram_raw(mode)?;
    }
    g /= data.len() as f64;
    Ok((&g + g.transpose()) * 0.5)
}

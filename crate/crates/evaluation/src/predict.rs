//! One-step-ahead prediction of the last frame of a window from the
//! preceding frames.
//!
//! A window holds `p` frames of `q` values. In the tensor layout used
//! throughout (time as the last, slowest mode) `vec` of a window is already
//! frame-major, so the last frame is the trailing `q` coordinates.

use mwcov_core::{DMatrix, DVector};
use nalgebra::Cholesky;

use crate::error::{EvalError, Result};

/// Where the frame index sits in the `vec` ordering of a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrameOrder {
    /// Frame index varies slowest (time is the last tensor mode).
    #[default]
    Slowest,
    /// Frame index varies fastest (time is the first tensor mode).
    Fastest,
}

/// Reorders a `pq x pq` matrix from `order` to frame-slowest layout.
pub fn to_frame_major(m: &DMatrix<f64>, p: usize, q: usize, order: FrameOrder) -> Result<DMatrix<f64>> {
    let n = p * q;
    if m.nrows() != n || m.ncols() != n {
        return Err(EvalError::Dimension(format!("{}x{} for p={p}, q={q}", m.nrows(), m.ncols())));
    }
    Ok(match order {
        FrameOrder::Slowest => m.clone(),
        FrameOrder::Fastest => {
            // index t + p·i in the source maps to i + q·t
            let src = |k: usize| (k / q) + p * (k % q);
            DMatrix::from_fn(n, n, |a, b| m[(src(a), src(b))])
        }
    })
}

/// Blocks of a precision partitioned into history (first `p-1` frames) and
/// the last frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorBlocks {
    /// `q x (p-1)q`.
    pub omega_21: DMatrix<f64>,
    /// `q x q`.
    pub omega_22: DMatrix<f64>,
    pub p: usize,
    pub q: usize,
}

impl PredictorBlocks {
    pub fn new(omega: &DMatrix<f64>, p: usize, q: usize, order: FrameOrder) -> Result<Self> {
        if p < 2 || q == 0 {
            return Err(EvalError::Dimension(format!("need p >= 2 and q >= 1, got p={p}, q={q}")));
        }
        let m = to_frame_major(omega, p, q, order)?;
        let h = (p - 1) * q;
        Ok(Self {
            omega_21: m.view((h, 0), (q, h)).into_owned(),
            omega_22: m.view((h, h), (q, q)).into_owned(),
            p,
            q,
        })
    }

    /// `ŷ = -Ω₂₂⁻¹ Ω₂₁ y`, the conditional mean of the last frame.
    pub fn predict(&self, history: &[f64]) -> Result<DVector<f64>> {
        let h = (self.p - 1) * self.q;
        if history.len() != h {
            return Err(EvalError::Dimension(format!("history of length {} for {h}", history.len())));
        }
        let rhs = -(&self.omega_21 * DVector::from_column_slice(history));
        let chol = Cholesky::new(self.omega_22.clone()).ok_or(EvalError::Singular)?;
        let mut x = chol.solve(&rhs);
        let scale = rhs.norm().max(f64::MIN_POSITIVE);
        for _ in 0..3 {
            let r = &rhs - &self.omega_22 * &x;
            if r.norm() <= 1e-10 * scale {
                return Ok(x);
            }
            x += chol.solve(&r);
        }
        if (&rhs - &self.omega_22 * &x).norm() <= 1e-10 * scale {
            Ok(x)
        } else {
            Err(EvalError::Singular)
        }
    }
}

/// Conditional-mean forecast of the last of `p` frames from the first `p-1`.
pub fn forward_predict(omega: &DMatrix<f64>, history: &[f64], p: usize, q: usize, order: FrameOrder) -> Result<DVector<f64>> {
    PredictorBlocks::new(omega, p, q, order)?.predict(history)
}

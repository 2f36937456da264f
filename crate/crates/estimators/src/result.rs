use mwcov_core::structured::DEFAULT_DENSE_CAP;
use mwcov_core::{CoreError, DMatrix, DVector, FactorSet, StructuredMatrix};

use crate::config::Method;
use crate::error::Result;

/// `Σ_l A_l ⊗ B_l` with `A_l` (side `d1`) the Kronecker-left factor, i.e.
/// acting on the slow tensor mode.
#[derive(Debug, Clone, PartialEq)]
pub struct KronTerms {
    pub d1: usize,
    pub d2: usize,
    pub terms: Vec<(DMatrix<f64>, DMatrix<f64>)>,
}

impl KronTerms {
    pub fn side(&self) -> usize {
        self.d1 * self.d2
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    /// `(A ⊗ B) vec(X) = vec(B X A^T)` summed over terms.
    pub fn apply(&self, v: &[f64]) -> Result<DVector<f64>> {
        if v.len() != self.side() {
            return Err(CoreError::DimensionMismatch(format!("vector of length {} for side {}", v.len(), self.side())).into());
        }
        let x = DMatrix::from_column_slice(self.d2, self.d1, v);
        let mut y = DMatrix::zeros(self.d2, self.d1);
        for (a, b) in &self.terms {
            y += b * &x * a.transpose();
        }
        Ok(DVector::from_column_slice(y.as_slice()))
    }

    pub fn materialize_capped(&self, cap: usize) -> Result<DMatrix<f64>> {
        let side = self.side();
        if side > cap {
            return Err(CoreError::TooLarge { side, cap }.into());
        }
        let mut m = DMatrix::zeros(side, side);
        for (a, b) in &self.terms {
            m += a.kronecker(b);
        }
        Ok(m)
    }
}

/// A fitted covariance or precision matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Structured(StructuredMatrix),
    KronTerms(KronTerms),
}

impl Model {
    pub fn side(&self) -> usize {
        match self {
            Model::Structured(s) => s.side(),
            Model::KronTerms(t) => t.side(),
        }
    }

    pub fn apply(&self, v: &[f64]) -> Result<DVector<f64>> {
        match self {
            Model::Structured(s) => Ok(s.apply(v)?),
            Model::KronTerms(t) => t.apply(v),
        }
    }

    pub fn column(&self, j: usize) -> Result<DVector<f64>> {
        let mut e = vec![0.0; self.side()];
        e[j] = 1.0;
        self.apply(&e)
    }

    pub fn materialize_capped(&self, cap: usize) -> Result<DMatrix<f64>> {
        match self {
            Model::Structured(s) => Ok(s.materialize_capped(cap)?),
            Model::KronTerms(t) => t.materialize_capped(cap),
        }
    }

    pub fn materialize(&self) -> Result<DMatrix<f64>> {
        self.materialize_capped(DEFAULT_DENSE_CAP)
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub method: Method,
    pub model: Model,
    /// Per-mode factors, indexed by tensor mode. Absent for KPCA fits of
    /// rank other than one.
    pub factors: Option<FactorSet>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_seconds: f64,
    pub lambda: Vec<f64>,
}

impl FitResult {
    /// True when every step decreases the objective up to a relative slack
    /// of `1e-9 max(1, |f|)`.
    pub fn objective_nonincreasing(&self) -> bool {
        is_nonincreasing(&self.objective_trace, 1e-9)
    }
}

pub fn is_nonincreasing(trace: &[f64], rel_slack: f64) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0] + rel_slack * w[0].abs().max(1.0))
}

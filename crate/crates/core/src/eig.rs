//! Spectral identities for Kronecker sums.
//!
//! With `A_k = U_k Λ_k U_k^T`, the Kronecker sum `⊕_k A_k` is diagonalized by
//! the Kronecker product of the `U_k`, and its eigenvalues are all sums
//! `Σ_k λ_k[i_k]`. Everything here is linear in `d` after the per-factor
//! eigendecompositions.

use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};
use crate::linalg::sym_eigen;
use crate::structured::FactorSet;

#[derive(Debug, Clone)]
pub struct EigKronSum {
    eigvecs: Vec<DMatrix<f64>>,
    eigvals: Vec<DVector<f64>>,
}

/// All tuple sums `Σ_k v_k[i_k]`, enumerated colexicographically (mode 0
/// fastest), i.e. in the same order as `vec` of a tensor with these dims.
pub fn kron_sum_spectrum(vals: &[&[f64]]) -> Vec<f64> {
    let mut acc = vec![0.0];
    // each new mode becomes the slowest index
    for v in vals {
        let mut next = Vec::with_capacity(acc.len() * v.len());
        for &x in v.iter() {
            next.extend(acc.iter().map(|a| a + x));
        }
        acc = next;
    }
    acc
}

impl EigKronSum {
    pub fn new(factors: &FactorSet) -> Result<Self> {
        let mut eigvecs = Vec::with_capacity(factors.len());
        let mut eigvals = Vec::with_capacity(factors.len());
        for f in factors.factors() {
            let e = sym_eigen(f)?;
            eigvecs.push(e.eigenvectors);
            eigvals.push(e.eigenvalues);
        }
        Ok(Self { eigvecs, eigvals })
    }

    pub fn eigvecs(&self) -> &[DMatrix<f64>] {
        &self.eigvecs
    }

    pub fn eigvals(&self) -> &[DVector<f64>] {
        &self.eigvals
    }

    pub fn dims(&self) -> Vec<usize> {
        self.eigvals.iter().map(|v| v.len()).collect()
    }

    /// Full spectrum of `⊕_k A_k` in colexicographic tuple order.
    pub fn spectrum(&self) -> Vec<f64> {
        let vals: Vec<&[f64]> = self.eigvals.iter().map(|v| v.as_slice()).collect();
        kron_sum_spectrum(&vals)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigvals.iter().map(|v| v.min()).sum()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.min_eigenvalue() > 0.0
    }

    /// `log det(⊕_k A_k)`; requires every tuple sum to be positive.
    pub fn logdet(&self) -> Result<f64> {
        if !self.is_positive_definite() {
            return Err(CoreError::NotPositiveDefinite);
        }
        Ok(self.spectrum().iter().map(|x| x.ln()).sum())
    }

    /// Partial traces of `(⊕_k A_k)^{-1}` onto every mode.
    ///
    /// For mode `k` this is `U_k diag(c_k) U_k^T` with
    /// `c_k[i] = Σ_{tuples with i_k = i} 1 / (Σ_j λ_j[i_j])`.
    pub fn inverse_partial_traces(&self) -> Result<Vec<DMatrix<f64>>> {
        if !self.is_positive_definite() {
            return Err(CoreError::NotPositiveDefinite);
        }
        let dims = self.dims();
        let spec = self.spectrum();
        let mut c: Vec<Vec<f64>> = dims.iter().map(|&d| vec![0.0; d]).collect();
        let mut idx = vec![0usize; dims.len()];
        for s in spec {
            let r = 1.0 / s;
            for (k, &i) in idx.iter().enumerate() {
                c[k][i] += r;
            }
            for (i, d) in idx.iter_mut().zip(&dims) {
                *i += 1;
                if *i < *d {
                    break;
                }
                *i = 0;
            }
        }
        Ok(self
            .eigvecs
            .iter()
            .zip(c)
            .map(|(u, ck)| {
                let scaled = u * DMatrix::from_diagonal(&DVector::from_vec(ck));
                let m = scaled * u.transpose();
                (&m + m.transpose()) * 0.5
            })
            .collect())
    }
}

//! Implicitly represented Kronecker-structured matrices.
//!
//! Factor `k` of a [`FactorSet`] always acts on tensor mode `k`. Because
//! tensors are stored colexicographically, the dense matrix of a Kronecker
//! product over factors `[F_1, ..., F_K]` is `F_K ⊗ ... ⊗ F_1`, and the
//! Kronecker sum is `Σ_k I_{right} ⊗ F_k ⊗ I_{left}`. `apply` never builds
//! either of these; it works through mode products.

use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};
use crate::linalg::{check_square, kron_all, relative_asymmetry, symmetrize, SYMMETRY_TOL};
use crate::tensor::Tensor;

/// Default cap on the side of a densely materialized matrix.
pub const DEFAULT_DENSE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    KronProduct,
    KronSum,
    SquaredKronSum,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    None,
    /// `trace(F_k) = d_k` for every mode except the last, which absorbs scale.
    TraceFixed,
    /// `||F_k||_F = 1` for every mode except the last.
    FrobeniusFixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    factors: Vec<DMatrix<f64>>,
    normalization: Normalization,
}

impl FactorSet {
    /// Validates squareness and symmetry, then stores `(F + F^T) / 2`.
    pub fn new(factors: Vec<DMatrix<f64>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(CoreError::Empty("factor set"));
        }
        let mut out = Vec::with_capacity(factors.len());
        for f in factors {
            check_square(&f, "factor")?;
            if f.iter().any(|x| !x.is_finite()) {
                return Err(CoreError::NonFinite);
            }
            let asym = relative_asymmetry(&f);
            if asym > SYMMETRY_TOL {
                return Err(CoreError::NotSymmetric(asym));
            }
            out.push(symmetrize(&f));
        }
        Ok(Self {
            factors: out,
            normalization: Normalization::None,
        })
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self {
            factors: dims.iter().map(|&d| DMatrix::identity(d, d)).collect(),
            normalization: Normalization::None,
        }
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    pub fn factor(&self, k: usize) -> &DMatrix<f64> {
        &self.factors[k]
    }

    pub fn into_factors(self) -> Vec<DMatrix<f64>> {
        self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Rescales so `trace(F_k) = d_k` for `k < K`; the Kronecker product of
    /// the factors is unchanged. Fails if any rescaled trace is not positive.
    pub fn normalize_trace(&mut self) -> Result<()> {
        let last = self.factors.len() - 1;
        let mut absorbed = 1.0;
        for f in &mut self.factors[..last] {
            let tr = f.trace();
            if tr <= 0.0 || !tr.is_finite() {
                return Err(CoreError::NotPositiveDefinite);
            }
            let c = f.nrows() as f64 / tr;
            *f *= c;
            absorbed /= c;
        }
        self.factors[last] *= absorbed;
        self.normalization = Normalization::TraceFixed;
        Ok(())
    }

    /// Rescales so `||F_k||_F = 1` for `k < K`, scale absorbed by the last.
    pub fn normalize_frobenius(&mut self) -> Result<()> {
        let last = self.factors.len() - 1;
        let mut absorbed = 1.0;
        for f in &mut self.factors[..last] {
            let n = f.norm();
            if n == 0.0 {
                return Err(CoreError::NotPositiveDefinite);
            }
            *f /= n;
            absorbed *= n;
        }
        self.factors[last] *= absorbed;
        self.normalization = Normalization::FrobeniusFixed;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredMatrix {
    structure: Structure,
    factors: Option<FactorSet>,
    dense: Option<DMatrix<f64>>,
}

impl StructuredMatrix {
    pub fn kron_product(factors: FactorSet) -> Self {
        Self {
            structure: Structure::KronProduct,
            factors: Some(factors),
            dense: None,
        }
    }

    pub fn kron_sum(factors: FactorSet) -> Self {
        Self {
            structure: Structure::KronSum,
            factors: Some(factors),
            dense: None,
        }
    }

    pub fn squared_kron_sum(factors: FactorSet) -> Self {
        Self {
            structure: Structure::SquaredKronSum,
            factors: Some(factors),
            dense: None,
        }
    }

    pub fn dense(m: DMatrix<f64>) -> Result<Self> {
        check_square(&m, "dense matrix")?;
        Ok(Self {
            structure: Structure::Dense,
            factors: None,
            dense: Some(m),
        })
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn factors(&self) -> Option<&FactorSet> {
        self.factors.as_ref()
    }

    pub fn dense_matrix(&self) -> Option<&DMatrix<f64>> {
        self.dense.as_ref()
    }

    /// Per-mode dimensions; a single entry for dense matrices.
    pub fn dims(&self) -> Vec<usize> {
        match &self.factors {
            Some(f) => f.dims(),
            None => vec![self.dense.as_ref().map_or(0, |m| m.nrows())],
        }
    }

    pub fn side(&self) -> usize {
        self.dims().iter().product()
    }

    fn apply_kron_sum(factors: &FactorSet, x: &Tensor) -> Result<Tensor> {
        let mut out = Tensor::zeros(x.dims().to_vec())?;
        for (k, f) in factors.factors().iter().enumerate() {
            out.axpy(1.0, &x.mode_product(f, k)?);
        }
        Ok(out)
    }

    /// Applies the matrix to a tensor laid out with the factor dimensions.
    pub fn apply_tensor(&self, x: &Tensor) -> Result<Tensor> {
        match (self.structure, &self.factors) {
            (Structure::Dense, _) => {
                let v = self.apply(x.as_slice())?;
                Tensor::new(x.dims().to_vec(), v.as_slice().to_vec())
            }
            (_, Some(fs)) => {
                if x.dims() != fs.dims().as_slice() {
                    return Err(CoreError::DimensionMismatch(format!(
                        "tensor dims {:?} vs factor dims {:?}",
                        x.dims(),
                        fs.dims()
                    )));
                }
                match self.structure {
                    Structure::KronProduct => {
                        let mut y = x.clone();
                        for (k, f) in fs.factors().iter().enumerate() {
                            y = y.mode_product(f, k)?;
                        }
                        Ok(y)
                    }
                    Structure::KronSum => Self::apply_kron_sum(fs, x),
                    Structure::SquaredKronSum => {
                        let y = Self::apply_kron_sum(fs, x)?;
                        Self::apply_kron_sum(fs, &y)
                    }
                    Structure::Dense => unreachable!(),
                }
            }
            (_, None) => unreachable!("structured matrix without factors"),
        }
    }

    /// Matrix-vector product without materializing structured matrices.
    pub fn apply(&self, v: &[f64]) -> Result<DVector<f64>> {
        let side = self.side();
        if v.len() != side {
            return Err(CoreError::DimensionMismatch(format!(
                "vector of length {} for matrix of side {side}",
                v.len()
            )));
        }
        match &self.dense {
            Some(m) => Ok(m * DVector::from_column_slice(v)),
            None => {
                let x = Tensor::unvec(&self.dims(), v)?;
                Ok(DVector::from_vec(self.apply_tensor(&x)?.into_vec()))
            }
        }
    }

    /// Dense matrix, refused above `cap` rows.
    pub fn materialize_capped(&self, cap: usize) -> Result<DMatrix<f64>> {
        let side = self.side();
        if side > cap {
            return Err(CoreError::TooLarge { side, cap });
        }
        if let Some(m) = &self.dense {
            return Ok(m.clone());
        }
        let fs = self.factors.as_ref().expect("structured matrix without factors");
        let rev: Vec<&DMatrix<f64>> = fs.factors().iter().rev().collect();
        match self.structure {
            Structure::KronProduct => Ok(kron_all(&rev)),
            Structure::KronSum => Ok(dense_kron_sum(fs.factors())),
            Structure::SquaredKronSum => {
                let s = dense_kron_sum(fs.factors());
                Ok(&s * &s)
            }
            Structure::Dense => unreachable!(),
        }
    }

    pub fn materialize(&self) -> Result<DMatrix<f64>> {
        self.materialize_capped(DEFAULT_DENSE_CAP)
    }

    /// Column `j` of the matrix.
    pub fn column(&self, j: usize) -> Result<DVector<f64>> {
        let mut e = vec![0.0; self.side()];
        e[j] = 1.0;
        self.apply(&e)
    }
}

/// Dense `⊕_k F_k` with factor `k` acting on mode `k` (colexicographic).
pub fn dense_kron_sum(factors: &[DMatrix<f64>]) -> DMatrix<f64> {
    let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    let d: usize = dims.iter().product();
    let mut out = DMatrix::zeros(d, d);
    for (k, f) in factors.iter().enumerate() {
        let left: usize = dims[..k].iter().product();
        let right: usize = dims[k + 1..].iter().product();
        let term = kron_all(&[&DMatrix::identity(right, right), f, &DMatrix::identity(left, left)]);
        out += term;
    }
    out
}

//! Dense multiway arrays stored colexicographically.
//!
//! The flat buffer of a [`Tensor`] is exactly `vec(X)`: the first index
//! varies fastest. A mode-`k` view splits the buffer into
//! `(left, d_k, right)` blocks where `left = d_1 ... d_{k-1}` and
//! `right = d_{k+1} ... d_K`; every block of `left * d_k` contiguous entries
//! is a column-major `left x d_k` matrix, which is what the unfold and
//! mode-product kernels below operate on.

use nalgebra::{DMatrix, DMatrixView};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

/// Product of the dimensions before and after `mode`.
pub fn mode_split(dims: &[usize], mode: usize) -> (usize, usize, usize) {
    let left = dims[..mode].iter().product();
    let right = dims[mode + 1..].iter().product();
    (left, dims[mode], right)
}

/// Colexicographic strides for `dims`.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = Vec::with_capacity(dims.len());
    let mut acc = 1;
    for &d in dims {
        s.push(acc);
        acc *= d;
    }
    s
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() {
            return Err(CoreError::Empty("tensor dims"));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(CoreError::DimensionMismatch(format!(
                "all dims must be positive, got {dims:?}"
            )));
        }
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(CoreError::DimensionMismatch(format!(
                "dims {dims:?} need {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = dims.iter().product();
        Self::new(dims, vec![0.0; len])
    }

    /// Inverse of [`Tensor::vec`].
    pub fn unvec(dims: &[usize], v: &[f64]) -> Result<Self> {
        Self::new(dims.to_vec(), v.to_vec())
    }

    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len: usize = dims.iter().product();
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for (i, d) in idx.iter_mut().zip(&dims) {
                *i += 1;
                if *i < *d {
                    break;
                }
                *i = 0;
            }
        }
        Self::new(dims, data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// `vec(X)`; a copy of the flat storage.
    pub fn vec(&self) -> Vec<f64> {
        self.data.clone()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut flat = 0;
        let mut stride = 1;
        for (i, d) in idx.iter().zip(&self.dims) {
            flat += i * stride;
            stride *= d;
        }
        self.data[flat]
    }

    /// Same data under different dimensions with the same total size.
    pub fn reshape(self, dims: Vec<usize>) -> Result<Self> {
        Self::new(dims, self.data)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(CoreError::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// Mode-`mode` matricization (0-based mode). Columns are mode fibers,
    /// ordered colexicographically over the remaining modes.
    pub fn unfold(&self, mode: usize) -> Result<DMatrix<f64>> {
        self.check_mode(mode)?;
        let (left, dk, right) = mode_split(&self.dims, mode);
        let mut out = DMatrix::zeros(dk, left * right);
        for r in 0..right {
            let block = &self.data[r * left * dk..(r + 1) * left * dk];
            for i in 0..dk {
                for l in 0..left {
                    out[(i, l + left * r)] = block[l + left * i];
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`Tensor::unfold`].
    pub fn fold(mat: &DMatrix<f64>, dims: &[usize], mode: usize) -> Result<Self> {
        if mode >= dims.len() {
            return Err(CoreError::ModeOutOfRange {
                mode,
                order: dims.len(),
            });
        }
        let (left, dk, right) = mode_split(dims, mode);
        if mat.nrows() != dk || mat.ncols() != left * right {
            return Err(CoreError::DimensionMismatch(format!(
                "cannot fold {}x{} into mode {mode} of {dims:?}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let mut data = vec![0.0; left * dk * right];
        for r in 0..right {
            for i in 0..dk {
                for l in 0..left {
                    data[l + left * (i + dk * r)] = mat[(i, l + left * r)];
                }
            }
        }
        Self::new(dims.to_vec(), data)
    }

    /// `X x_mode M`: contracts mode `mode` with the columns of `m` (J x d_k).
    pub fn mode_product(&self, m: &DMatrix<f64>, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let (left, dk, right) = mode_split(&self.dims, mode);
        if m.ncols() != dk {
            return Err(CoreError::DimensionMismatch(format!(
                "mode-{mode} product needs {dk} columns, got {}",
                m.ncols()
            )));
        }
        let j = m.nrows();
        let mut dims = self.dims.clone();
        dims[mode] = j;
        if left == 1 {
            // mode 0: one product over the whole `d_0 x rest` matrix
            let x = DMatrixView::from_slice(&self.data, dk, right);
            return Self::new(dims, (m * x).as_slice().to_vec());
        }
        let mut data = vec![0.0; left * j * right];
        let mt = m.transpose();
        for r in 0..right {
            let x = DMatrixView::from_slice(&self.data[r * left * dk..(r + 1) * left * dk], left, dk);
            let y = x * &mt;
            data[r * left * j..(r + 1) * left * j].copy_from_slice(y.as_slice());
        }
        Self::new(dims, data)
    }

    /// `X_(k) X_(k)^T` without forming the unfolding.
    pub fn mode_gram_raw(&self, mode: usize) -> Result<DMatrix<f64>> {
        self.check_mode(mode)?;
        let (left, dk, right) = mode_split(&self.dims, mode);
        let mut g = DMatrix::zeros(dk, dk);
        if left == 1 {
            let x = DMatrixView::from_slice(&self.data, dk, right);
            g.gemm(1.0, &x, &x.transpose(), 0.0);
            return Ok(g);
        }
        for r in 0..right {
            let x = DMatrixView::from_slice(&self.data[r * left * dk..(r + 1) * left * dk], left, dk);
            g.gemm_tr(1.0, &x, &x, 1.0);
        }
        Ok(g)
    }

    /// `X_(k) Y_(k)^T` for two tensors of equal shape.
    pub fn mode_cross_raw(&self, other: &Tensor, mode: usize) -> Result<DMatrix<f64>> {
        self.check_mode(mode)?;
        if self.dims != other.dims {
            return Err(CoreError::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        let (left, dk, right) = mode_split(&self.dims, mode);
        let mut g = DMatrix::zeros(dk, dk);
        if left == 1 {
            let x = DMatrixView::from_slice(&self.data, dk, right);
            let y = DMatrixView::from_slice(&other.data, dk, right);
            g.gemm(1.0, &x, &y.transpose(), 0.0);
            return Ok(g);
        }
        for r in 0..right {
            let range = r * left * dk..(r + 1) * left * dk;
            let x = DMatrixView::from_slice(&self.data[range.clone()], left, dk);
            let y = DMatrixView::from_slice(&other.data[range], left, dk);
            g.gemm_tr(1.0, &x, &y, 1.0);
        }
        Ok(g)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dims: self.dims.clone(),
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn axpy(&mut self, a: f64, other: &Tensor) {
        debug_assert_eq!(self.dims, other.dims);
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

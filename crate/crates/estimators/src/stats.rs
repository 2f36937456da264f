//! Second-moment statistics consumed by the estimators, computed either from
//! (centered) samples or from a dense sample covariance.

use mwcov_core::linalg::{check_square, relative_asymmetry, sym_sqrt};
use mwcov_core::ops::{center, mode_gram, mode_scatter, partial_trace};
use mwcov_core::{CoreError, DMatrix, FactorSet, StructuredMatrix, Tensor};

use crate::error::Result;

#[derive(Debug, Clone)]
enum Source {
    Data(Vec<Tensor>),
    Cov(DMatrix<f64>),
}

#[derive(Debug, Clone)]
pub struct SampleStats {
    dims: Vec<usize>,
    source: Source,
}

impl SampleStats {
    /// Samples are centered unless `subtract_mean` is false or only one
    /// sample is given (centering would leave nothing).
    pub fn from_data(data: &[Tensor], subtract_mean: bool) -> Result<Self> {
        let first = data.first().ok_or(CoreError::Empty("sample list"))?;
        let dims = first.dims().to_vec();
        let samples = if subtract_mean && data.len() == 1 {
            log::warn!("single sample: mean subtraction disabled");
            data.to_vec()
        } else if subtract_mean {
            center(data)?
        } else {
            if data.iter().any(|t| t.dims() != dims.as_slice()) {
                return Err(CoreError::DimensionMismatch("heterogeneous sample dims".into()).into());
            }
            data.to_vec()
        };
        Ok(Self {
            dims,
            source: Source::Data(samples),
        })
    }

    /// Like [`SampleStats::from_data`], reshaping every sample to `dims`.
    pub fn from_data_with_dims(data: &[Tensor], dims: &[usize], subtract_mean: bool) -> Result<Self> {
        let reshaped = data
            .iter()
            .map(|t| t.clone().reshape(dims.to_vec()))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::from_data(&reshaped, subtract_mean)
    }

    pub fn from_cov(s: DMatrix<f64>, dims: &[usize]) -> Result<Self> {
        check_square(&s, "sample covariance")?;
        let d: usize = dims.iter().product();
        if s.nrows() != d || dims.is_empty() {
            return Err(CoreError::DimensionMismatch(format!("side {} vs dims {dims:?}", s.nrows())).into());
        }
        let asym = relative_asymmetry(&s);
        if asym > 1e-10 {
            return Err(CoreError::NotSymmetric(asym).into());
        }
        Ok(Self {
            dims: dims.to_vec(),
            source: Source::Cov((&s + s.transpose()) * 0.5),
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn side(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn n_samples(&self) -> Option<usize> {
        match &self.source {
            Source::Data(x) => Some(x.len()),
            Source::Cov(_) => None,
        }
    }

    /// The (centered) samples, when built from data.
    pub fn samples(&self) -> Option<&[Tensor]> {
        match &self.source {
            Source::Data(x) => Some(x),
            Source::Cov(_) => None,
        }
    }

    /// Dense `S`, refused above `cap` rows.
    pub fn covariance(&self, cap: usize) -> Result<DMatrix<f64>> {
        let d = self.side();
        if d > cap {
            return Err(CoreError::TooLarge { side: d, cap }.into());
        }
        match &self.source {
            Source::Cov(s) => Ok(s.clone()),
            Source::Data(xs) => {
                let mut x = DMatrix::zeros(d, xs.len());
                for (j, t) in xs.iter().enumerate() {
                    x.column_mut(j).copy_from_slice(t.as_slice());
                }
                let s = &x * x.transpose() / xs.len() as f64;
                Ok((&s + s.transpose()) * 0.5)
            }
        }
    }

    /// Applies `f` to every column of `m` viewed as a tensor with `dims`.
    fn map_columns(&self, m: &DMatrix<f64>, f: &dyn Fn(&Tensor) -> Result<Tensor>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for j in 0..m.ncols() {
            let t = Tensor::new(self.dims.clone(), m.column(j).iter().copied().collect())?;
            out.column_mut(j).copy_from_slice(f(&t)?.as_slice());
        }
        Ok(out)
    }

    /// `partial_trace_k(S)`.
    pub fn mode_scatter(&self, k: usize) -> Result<DMatrix<f64>> {
        match &self.source {
            Source::Data(xs) => Ok(mode_scatter(xs, k)?),
            Source::Cov(s) => Ok(partial_trace(s, k, &self.dims)?),
        }
    }

    /// Mode-`k` whitened Gram `(d_k / d) partial_trace_k(W S W)` with `W` the
    /// embedded square roots of the other modes' whiteners.
    pub fn mode_gram(&self, k: usize, whiteners: Option<&FactorSet>) -> Result<DMatrix<f64>> {
        match &self.source {
            Source::Data(xs) => Ok(mode_gram(xs, k, whiteners)?),
            Source::Cov(s) => {
                let roots: Vec<Option<DMatrix<f64>>> = match whiteners {
                    None => vec![None; self.dims.len()],
                    Some(w) => w
                        .factors()
                        .iter()
                        .enumerate()
                        .map(|(j, f)| if j == k { Ok(None) } else { sym_sqrt(f).map(Some) })
                        .collect::<std::result::Result<_, _>>()?,
                };
                let whiten = |t: &Tensor| -> Result<Tensor> {
                    let mut y = t.clone();
                    for (j, r) in roots.iter().enumerate() {
                        if let Some(r) = r {
                            y = y.mode_product(r, j)?;
                        }
                    }
                    Ok(y)
                };
                let ws = self.map_columns(s, &whiten)?;
                let wsw = self.map_columns(&ws.transpose(), &whiten)?;
                let pt = partial_trace(&wsw, k, &self.dims)?;
                let g = pt * (self.dims[k] as f64 / self.side() as f64);
                Ok((&g + g.transpose()) * 0.5)
            }
        }
    }

    /// `tr(S M)`.
    pub fn trace_with(&self, m: &StructuredMatrix) -> Result<f64> {
        match &self.source {
            Source::Data(xs) => {
                let mut acc = 0.0;
                for x in xs {
                    let y = m.apply_tensor(x)?;
                    acc += x.as_slice().iter().zip(y.as_slice()).map(|(a, b)| a * b).sum::<f64>();
                }
                Ok(acc / xs.len() as f64)
            }
            Source::Cov(s) => {
                let ms = self.map_columns(s, &|t| Ok(m.apply_tensor(t)?))?;
                Ok(ms.trace())
            }
        }
    }

    /// `tr(S Ψ²)` for a symmetric `Ψ` given through its action.
    pub fn trace_squared(&self, psi: &dyn Fn(&Tensor) -> Result<Tensor>) -> Result<f64> {
        match &self.source {
            Source::Data(xs) => {
                let mut acc = 0.0;
                for x in xs {
                    acc += psi(x)?.norm_sq();
                }
                Ok(acc / xs.len() as f64)
            }
            Source::Cov(s) => {
                let ps = self.map_columns(s, psi)?;
                let psp = self.map_columns(&ps.transpose(), psi)?;
                Ok(psp.trace())
            }
        }
    }

    /// `partial_trace_k(S R + R S)` for a symmetric `R` given through its action.
    pub fn sym_cross(&self, k: usize, r: &dyn Fn(&Tensor) -> Result<Tensor>) -> Result<DMatrix<f64>> {
        let c = match &self.source {
            Source::Data(xs) => {
                let mut c = DMatrix::zeros(self.dims[k], self.dims[k]);
                for x in xs {
                    c += x.mode_cross_raw(&r(x)?, k)?;
                }
                c / xs.len() as f64
            }
            Source::Cov(s) => {
                let rs = self.map_columns(s, r)?;
                partial_trace(&rs, k, &self.dims)?
            }
        };
        Ok(&c + c.transpose())
    }
}

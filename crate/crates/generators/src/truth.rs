//! Ground-truth operators `L` with `L vec(U) = vec(W)` and the implied
//! precision `σ_w^{-2} L^T L`.
//!
//! Kronecker factors are written left to right with the leftmost factor on
//! the slowest index: time is the last tensor mode, and within a frame the
//! first grid axis varies fastest.

use std::collections::BTreeSet;

use mwcov_core::io::Triplets;
use mwcov_core::linalg::sym_eigen;
use mwcov_core::{DMatrix, DVector, Tensor};
use nalgebra::LU;
use sprs::CsMat;

use crate::error::{GenError, Result};
use crate::operators::{ar1_bidiagonal, difference_1d, laplacian_1d, prune, sparse_kron_terms, sparse_matvec, to_dense};
use crate::spec::{ProcessKind, ProcessParams, ProcessSpec};

/// Largest `d T` for which the precision is stored explicitly.
pub const PRECISION_ROW_CAP: usize = 20_000;

/// Largest side for which the dense covariance may be formed.
pub const DENSE_COVARIANCE_CAP: usize = 4096;

#[derive(Debug, Clone)]
struct PoissonSolver {
    u1: DMatrix<f64>,
    l1: DVector<f64>,
    u2: DMatrix<f64>,
    l2: DVector<f64>,
}

impl PoissonSolver {
    fn new(d1: usize, d2: usize) -> Result<Self> {
        let e1 = sym_eigen(&laplacian_1d(d1)?)?;
        let e2 = sym_eigen(&laplacian_1d(d2)?)?;
        Ok(Self {
            u1: e1.eigenvectors,
            l1: e1.eigenvalues,
            u2: e2.eigenvectors,
            l2: e2.eigenvalues,
        })
    }

    /// Solves `(A_{d1} ⊕ A_{d2}) u = w` frame by frame for a `(d1, d2, T)` block.
    fn solve_frames(&self, w: Tensor) -> Result<Tensor> {
        let mut y = w.mode_product(&self.u1.transpose(), 0)?.mode_product(&self.u2.transpose(), 1)?;
        let (d1, d2) = (self.l1.len(), self.l2.len());
        for (idx, v) in y.as_mut_slice().iter_mut().enumerate() {
            let i = idx % d1;
            let j = (idx / d1) % d2;
            *v /= self.l1[i] + self.l2[j];
        }
        Ok(y.mode_product(&self.u1, 0)?.mode_product(&self.u2, 1)?)
    }
}

#[derive(Debug, Clone)]
enum Solver {
    Poisson(PoissonSolver),
    PoissonAr { frames: PoissonSolver, a: f64 },
    ConvectionDiffusion { step: LU<f64, nalgebra::Dyn, nalgebra::Dyn>, inv_dt: f64 },
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    spec: ProcessSpec,
    operator: CsMat<f64>,
    operator_t: CsMat<f64>,
    precision: Option<CsMat<f64>>,
    solver: Solver,
}

pub fn build_poisson_2d(spec: &ProcessSpec) -> Result<GroundTruth> {
    expect_kind(spec, ProcessKind::Poisson2D)?;
    let (d1, d2) = spec.grid;
    let a1 = laplacian_1d(d1)?;
    let a2 = laplacian_1d(d2)?;
    let (i1, i2) = (DMatrix::identity(d1, d1), DMatrix::identity(d2, d2));
    let l = sparse_kron_terms(d1 * d2, &[(1.0, vec![&i2, &a1]), (1.0, vec![&a2, &i1])]);
    GroundTruth::assemble(spec, l, Solver::Poisson(PoissonSolver::new(d1, d2)?), PRECISION_ROW_CAP)
}

pub fn build_poisson_ar1(spec: &ProcessSpec) -> Result<GroundTruth> {
    build_poisson_ar1_capped(spec, PRECISION_ROW_CAP)
}

pub fn build_poisson_ar1_capped(spec: &ProcessSpec, cap: usize) -> Result<GroundTruth> {
    expect_kind(spec, ProcessKind::PoissonAr1)?;
    let (d1, d2) = spec.grid;
    let t = spec.t;
    let bt = ar1_bidiagonal(t, spec.params.a)?.transpose();
    let a1 = laplacian_1d(d1)?;
    let a2 = laplacian_1d(d2)?;
    let (i1, i2) = (DMatrix::identity(d1, d1), DMatrix::identity(d2, d2));
    let l = sparse_kron_terms(spec.total_size(), &[(1.0, vec![&bt, &i2, &a1]), (1.0, vec![&bt, &a2, &i1])]);
    let solver = Solver::PoissonAr {
        frames: PoissonSolver::new(d1, d2)?,
        a: spec.params.a,
    };
    GroundTruth::assemble(spec, l, solver, cap)
}

pub fn build_convection_diffusion(spec: &ProcessSpec) -> Result<GroundTruth> {
    build_convection_diffusion_capped(spec, PRECISION_ROW_CAP)
}

pub fn build_convection_diffusion_capped(spec: &ProcessSpec, cap: usize) -> Result<GroundTruth> {
    expect_kind(spec, ProcessKind::ConvectionDiffusion)?;
    let l = convection_diffusion_operator(spec.grid, spec.t, &spec.params)?;
    let (d1, d2) = spec.grid;
    let p = &spec.params;
    let q = d1 * d2;
    // one implicit step: (I/Δt + G) U_t = W_t + U_{t-1}/Δt
    let step = (spatial_convection_diffusion(d1, d2, p)? + DMatrix::identity(q, q) / p.dt).lu();
    if !step.is_invertible() {
        return Err(GenError::Solve(f64::INFINITY));
    }
    GroundTruth::assemble(spec, l, Solver::ConvectionDiffusion { step, inv_dt: 1.0 / p.dt }, cap)
}

/// Spatial part `G = (θ/h²)(A ⊕ A) + (ε/2h)(D ⊕ D)` on one frame.
fn spatial_convection_diffusion(d1: usize, d2: usize, p: &ProcessParams) -> Result<DMatrix<f64>> {
    let (a1, a2, e1, e2) = (laplacian_1d(d1)?, laplacian_1d(d2)?, difference_1d(d1)?, difference_1d(d2)?);
    let (i1, i2) = (DMatrix::<f64>::identity(d1, d1), DMatrix::<f64>::identity(d2, d2));
    let diff = p.theta / (p.h * p.h);
    let conv = p.epsilon / (2.0 * p.h);
    Ok((i2.kronecker(&a1) + a2.kronecker(&i1)) * diff + (i2.kronecker(&e1) + e2.kronecker(&i1)) * conv)
}

/// Convection-diffusion operator
/// `(1/Δt)(D_T ⊗ I ⊗ I) + (θ/h²)(I ⊗ (A ⊕ A)) + (ε/2h)(I ⊗ (D ⊕ D))`.
///
/// Only `h` and `Δt` are checked here, so the degenerate `θ = 0` operator can
/// be assembled; [`build_convection_diffusion`] additionally requires `θ > 0`.
pub fn convection_diffusion_operator(grid: (usize, usize), t: usize, p: &ProcessParams) -> Result<CsMat<f64>> {
    if !(p.h > 0.0 && p.dt > 0.0) {
        return Err(GenError::InvalidSpec(format!("h = {} and dt = {} must be positive", p.h, p.dt)));
    }
    let (d1, d2) = grid;
    let (dt_m, a1, a2, e1, e2) = (difference_1d(t)?, laplacian_1d(d1)?, laplacian_1d(d2)?, difference_1d(d1)?, difference_1d(d2)?);
    let (i1, i2, it) = (DMatrix::identity(d1, d1), DMatrix::identity(d2, d2), DMatrix::identity(t, t));
    let diff = p.theta / (p.h * p.h);
    let conv = p.epsilon / (2.0 * p.h);
    Ok(sparse_kron_terms(
        d1 * d2 * t,
        &[
            (1.0 / p.dt, vec![&dt_m, &i2, &i1]),
            (diff, vec![&it, &i2, &a1]),
            (diff, vec![&it, &a2, &i1]),
            (conv, vec![&it, &i2, &e1]),
            (conv, vec![&it, &e2, &i1]),
        ],
    ))
}

/// Dispatches on `spec.kind`.
pub fn build(spec: &ProcessSpec) -> Result<GroundTruth> {
    match spec.kind {
        ProcessKind::Poisson2D => build_poisson_2d(spec),
        ProcessKind::PoissonAr1 => build_poisson_ar1(spec),
        ProcessKind::ConvectionDiffusion => build_convection_diffusion(spec),
    }
}

fn expect_kind(spec: &ProcessSpec, kind: ProcessKind) -> Result<()> {
    if spec.kind != kind {
        return Err(GenError::InvalidSpec(format!("expected {kind:?}, got {:?}", spec.kind)));
    }
    spec.validate()
}

impl GroundTruth {
    fn assemble(spec: &ProcessSpec, operator: CsMat<f64>, solver: Solver, cap: usize) -> Result<Self> {
        let operator_t = operator.transpose_view().to_csr();
        let precision = if operator.rows() <= cap {
            let s = spec.params.sigma_w.powi(-2);
            let ltl = &operator_t * &operator;
            Some(prune(ltl.map(|v| v * s)))
        } else {
            None
        };
        Ok(Self {
            spec: spec.clone(),
            operator,
            operator_t,
            precision,
            solver,
        })
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn tensor_dims(&self) -> Vec<usize> {
        self.spec.tensor_dims()
    }

    /// Side of `L` and of the precision.
    pub fn side(&self) -> usize {
        self.operator.rows()
    }

    /// `L` in CSR form.
    pub fn operator(&self) -> &CsMat<f64> {
        &self.operator
    }

    /// Explicit precision, present when `side() <= cap` at construction.
    pub fn precision(&self) -> Option<&CsMat<f64>> {
        self.precision.as_ref()
    }

    fn noise_precision(&self) -> f64 {
        self.spec.params.sigma_w.powi(-2)
    }

    pub fn apply_operator(&self, v: &[f64]) -> Vec<f64> {
        sparse_matvec(&self.operator, v)
    }

    /// `σ_w^{-2} L^T L v` without forming the product.
    pub fn apply_precision(&self, v: &[f64]) -> Vec<f64> {
        let lv = sparse_matvec(&self.operator, v);
        let s = self.noise_precision();
        sparse_matvec(&self.operator_t, &lv).into_iter().map(|x| x * s).collect()
    }

    /// Nonzeros of precision row `i` (equivalently column `i`), sorted by column.
    pub fn precision_row(&self, i: usize) -> Vec<(usize, f64)> {
        if let Some(p) = &self.precision {
            return p.outer_view(i).map(|r| r.iter().map(|(j, v)| (j, *v)).collect()).unwrap_or_default();
        }
        let s = self.noise_precision();
        let mut acc = std::collections::BTreeMap::new();
        // column i of L, then combine the matching rows of L
        if let Some(col) = self.operator_t.outer_view(i) {
            for (k, lki) in col.iter() {
                if let Some(row) = self.operator.outer_view(k) {
                    for (j, lkj) in row.iter() {
                        *acc.entry(j).or_insert(0.0) += lki * lkj;
                    }
                }
            }
        }
        acc.into_iter().filter(|(_, v)| *v != 0.0).map(|(j, v)| (j, v * s)).collect()
    }

    /// Dense column `j` of the precision.
    pub fn precision_column(&self, j: usize) -> DVector<f64> {
        let mut c = DVector::zeros(self.side());
        for (i, v) in self.precision_row(j) {
            c[i] = v;
        }
        c
    }

    /// Off-diagonal support as pairs `(i, j)` with `i < j`.
    pub fn support(&self) -> BTreeSet<(usize, usize)> {
        let mut s = BTreeSet::new();
        for i in 0..self.side() {
            for (j, _) in self.precision_row(i) {
                if i < j {
                    s.insert((i, j));
                }
            }
        }
        s
    }

    pub fn precision_triplets(&self) -> Triplets {
        let n = self.side();
        let entries = (0..n).flat_map(|i| self.precision_row(i).into_iter().map(move |(j, v)| (i, j, v))).collect();
        Triplets { rows: n, cols: n, entries }
    }

    pub fn operator_dense(&self) -> Result<DMatrix<f64>> {
        self.check_dense_cap()?;
        Ok(to_dense(&self.operator))
    }

    pub fn precision_dense(&self) -> Result<DMatrix<f64>> {
        self.check_dense_cap()?;
        let n = self.side();
        let mut p = DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in self.precision_row(i) {
                p[(i, j)] = v;
            }
        }
        Ok(p)
    }

    /// `σ_w^2 L^{-1} L^{-T}`, built from `d T` structured solves.
    pub fn covariance_dense(&self) -> Result<DMatrix<f64>> {
        self.check_dense_cap()?;
        let n = self.side();
        let mut linv = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let c = self.solve(&e)?;
            linv.column_mut(j).copy_from_slice(&c);
            e[j] = 0.0;
        }
        let cov = &linv * linv.transpose() * self.spec.params.sigma_w.powi(2);
        Ok((&cov + cov.transpose()) * 0.5)
    }

    fn check_dense_cap(&self) -> Result<()> {
        if self.side() > DENSE_COVARIANCE_CAP {
            return Err(GenError::TooLarge {
                rows: self.side(),
                cap: DENSE_COVARIANCE_CAP,
            });
        }
        Ok(())
    }

    fn solve_once(&self, w: &[f64]) -> Result<Vec<f64>> {
        let (d1, d2) = self.spec.grid;
        let t = self.spec.t;
        let out = match &self.solver {
            Solver::Poisson(p) => p.solve_frames(Tensor::new(vec![d1, d2, 1], w.to_vec())?)?.into_vec(),
            Solver::PoissonAr { frames, a } => {
                // (B^T ⊗ M) vec(U) = vec(W)  <=>  M U B = W
                let mut u = frames.solve_frames(Tensor::new(vec![d1, d2, t], w.to_vec())?)?.into_vec();
                let q = d1 * d2;
                for s in 1..t {
                    let (prev, cur) = u.split_at_mut(s * q);
                    for (c, p) in cur[..q].iter_mut().zip(&prev[(s - 1) * q..]) {
                        *c += a * p;
                    }
                }
                u
            }
            Solver::ConvectionDiffusion { step, inv_dt } => {
                let q = d1 * d2;
                let mut u = vec![0.0; q * t];
                let mut prev = DVector::zeros(q);
                for s in 0..t {
                    let rhs = DVector::from_column_slice(&w[s * q..(s + 1) * q]) + &prev * *inv_dt;
                    let x = step.solve(&rhs).ok_or(GenError::Solve(f64::INFINITY))?;
                    u[s * q..(s + 1) * q].copy_from_slice(x.as_slice());
                    prev = x;
                }
                u
            }
        };
        Ok(out)
    }

    /// Solves `L u = w` with the structured solver and verifies
    /// `‖L u - w‖ <= 1e-10 ‖w‖`, refining iteratively if needed.
    pub fn solve(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.side() {
            return Err(GenError::InvalidSpec(format!("right-hand side length {} vs {}", w.len(), self.side())));
        }
        let wn = norm(w);
        let mut u = self.solve_once(w)?;
        let mut res = f64::INFINITY;
        for _ in 0..3 {
            let r: Vec<f64> = w.iter().zip(self.apply_operator(&u)).map(|(a, b)| a - b).collect();
            res = norm(&r);
            if res <= 1e-10 * wn {
                return Ok(u);
            }
            if !res.is_finite() {
                break;
            }
            let du = self.solve_once(&r)?;
            u.iter_mut().zip(du).for_each(|(x, dx)| *x += dx);
        }
        Err(GenError::Solve(res / wn.max(f64::MIN_POSITIVE)))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

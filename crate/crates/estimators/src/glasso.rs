//! Graphical lasso by primal block coordinate descent.
//!
//! Each column update is the exact minimizer over `(θ₁₂, θ₂₂)`, found from
//! a lasso in `θ₁₂` whose Hessian is `Θ₁₁⁻¹`, so `Θ` stays positive
//! definite and the objective never increases. `Θ⁻¹` is carried along by
//! rank-one updates. Blocks that decouple at the given `λ`
//! (no `|S_ij| > λ` link between them) are solved independently.

use std::time::Instant;

use mwcov_core::linalg::check_square;
use mwcov_core::{CoreError, DMatrix, FactorSet, StructuredMatrix};
use nalgebra::Cholesky;

use crate::config::{EstimatorConfig, Method};
use crate::error::{EstError, Result};
use crate::result::{FitResult, Model};

const CD_MAX_SWEEPS: usize = 1000;
const REFRESH_EVERY: usize = 10;
/// Above this many nonzeros the cubic active-set solve costs more than it saves.
const EXACT_MAX_ACTIVE: usize = 128;

#[derive(Debug, Clone, Copy)]
pub struct GlassoParams {
    /// Stop when the KKT residual divided by `max_i S_ii` is at most this.
    pub tol: f64,
    pub max_iter: usize,
    pub penalize_diagonal: bool,
    pub deadline: Option<Instant>,
    /// Also stop once a sweep changes the objective by at most this, relative.
    pub objective_tol: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GlassoOutput {
    pub theta: DMatrix<f64>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Unscaled KKT residual of the returned iterate.
    pub kkt: f64,
}

/// `tr(SΘ) - log det Θ + λ Σ_{i≠j} |Θ_ij|` (plus the diagonal if penalized).
pub fn glasso_objective(s: &DMatrix<f64>, theta: &DMatrix<f64>, lambda: f64, penalize_diagonal: bool) -> Result<f64> {
    let chol = Cholesky::new(theta.clone()).ok_or(CoreError::NotPositiveDefinite)?;
    Ok(objective_with(s, theta, &chol, lambda, penalize_diagonal))
}

fn objective_with(s: &DMatrix<f64>, theta: &DMatrix<f64>, chol: &Cholesky<f64, nalgebra::Dyn>, lambda: f64, pen_diag: bool) -> f64 {
    let logdet: f64 = chol.l_dirty().diagonal().iter().map(|x| 2.0 * x.ln()).sum();
    let tr: f64 = s.iter().zip(theta.iter()).map(|(a, b)| a * b).sum();
    let mut pen = 0.0;
    for j in 0..theta.ncols() {
        for i in 0..theta.nrows() {
            if i != j || pen_diag {
                pen += theta[(i, j)].abs();
            }
        }
    }
    tr - logdet + lambda * pen
}

/// Largest violation of the stationarity conditions `W - S ∈ λ ∂‖Θ‖`.
pub fn kkt_residual(s: &DMatrix<f64>, theta: &DMatrix<f64>, w: &DMatrix<f64>, lambda: f64, pen_diag: bool) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..s.ncols() {
        for i in 0..s.nrows() {
            let g = s[(i, j)] - w[(i, j)];
            let penalized = i != j || pen_diag;
            let r = if !penalized || lambda == 0.0 {
                g.abs()
            } else if theta[(i, j)] != 0.0 {
                (g + lambda * theta[(i, j)].signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            };
            worst = worst.max(r);
        }
    }
    worst
}

struct Block {
    idx: Vec<usize>,
    s: DMatrix<f64>,
    theta: DMatrix<f64>,
    /// `Θ⁻¹`, kept current through the column updates.
    w: DMatrix<f64>,
}

impl Block {
    fn new(idx: Vec<usize>, s_full: &DMatrix<f64>, warm: Option<&DMatrix<f64>>, lambda: f64, pen_diag: bool) -> Result<Self> {
        let p = idx.len();
        let s = DMatrix::from_fn(p, p, |a, b| s_full[(idx[a], idx[b])]);
        let (theta, w) = match warm {
            Some(t) => {
                let mut th = DMatrix::from_fn(p, p, |a, b| t[(idx[a], idx[b])]);
                let mut w = Cholesky::new(th.clone()).ok_or(CoreError::NotPositiveDefinite)?.inverse();
                // best multiple of the warm start: α = p / (tr(SΘ) + penalty(Θ))
                let pen: f64 = (0..p)
                    .flat_map(|b| (0..p).map(move |a| (a, b)))
                    .filter(|&(a, b)| pen_diag || a != b)
                    .map(|(a, b)| th[(a, b)].abs())
                    .sum();
                let denom = s.dot(&th) + lambda * pen;
                if denom > 0.0 && denom.is_finite() {
                    let alpha = p as f64 / denom;
                    th *= alpha;
                    w /= alpha;
                }
                (th, w)
            }
            None => {
                let diag = s.diagonal().map(|x| x + if pen_diag { lambda } else { 0.0 });
                (DMatrix::from_diagonal(&diag.map(|x| 1.0 / x)), DMatrix::from_diagonal(&diag))
            }
        };
        Ok(Self { idx, s, theta, w })
    }

    /// Exact minimization over row/column `j` with everything else fixed.
    ///
    /// With `A = Θ₁₁⁻¹ = W₁₁ - w₁₂w₁₂ᵀ/W₂₂` and `w₂₂ = s₂₂ (+ λ)`, the
    /// optimal off-diagonal column solves the lasso
    /// `min ½ w₂₂ θᵀAθ + s₁₂ᵀθ + λ‖θ‖₁`, and `θ₂₂ = 1/w₂₂ + θᵀAθ`.
    fn update_column(&mut self, j: usize, lambda: f64, pen_diag: bool, tol: f64) -> Result<()> {
        let p = self.idx.len();
        let lp = if pen_diag { lambda } else { 0.0 };
        let w22 = self.s[(j, j)] + lp;
        if !(w22 > 0.0) {
            return Err(EstError::NotPsd(self.s[(j, j)]));
        }
        // W <- A, padded with a zero row and column j
        let wj = self.w.column(j).into_owned();
        let wjj = wj[j];
        self.w.ger(-1.0 / wjj, &wj, &wj, 1.0);
        for i in 0..p {
            self.w[(i, j)] = 0.0;
            self.w[(j, i)] = 0.0;
        }
        let mut beta: Vec<f64> = (0..p).map(|i| if i == j { 0.0 } else { self.theta[(i, j)] }).collect();
        if lambda == 0.0 {
            // A⁻¹ is the current Θ₁₁
            let mut s12 = self.s.column(j).into_owned();
            s12[j] = 0.0;
            let t = &self.theta * s12;
            for i in 0..p {
                beta[i] = if i == j { 0.0 } else { -t[i] / w22 };
            }
        } else {
            let s12: Vec<f64> = self.s.column(j).iter().copied().collect();
            lasso_cd(&self.w, w22, &s12, j, lambda, tol, &mut beta);
        }
        let mut u = nalgebra::DVector::zeros(p);
        for (k, &bk) in beta.iter().enumerate() {
            if bk != 0.0 {
                u.axpy(bk, &self.w.column(k), 1.0);
            }
        }
        let quad: f64 = beta.iter().zip(u.iter()).map(|(b, x)| b * x).sum();
        for i in 0..p {
            if i != j {
                self.theta[(i, j)] = beta[i];
                self.theta[(j, i)] = beta[i];
            }
        }
        self.theta[(j, j)] = 1.0 / w22 + quad;
        // W₁₁ = A + w₂₂ u uᵀ, w₁₂ = -w₂₂ u, W₂₂ = w₂₂
        self.w.ger(w22, &u, &u, 1.0);
        for i in 0..p {
            self.w[(i, j)] = -w22 * u[i];
            self.w[(j, i)] = -w22 * u[i];
        }
        self.w[(j, j)] = w22;
        Ok(())
    }

    fn sweep(&mut self, lambda: f64, pen_diag: bool, tol: f64, deadline: Option<Instant>) -> Result<bool> {
        for j in 0..self.idx.len() {
            if deadline.is_some_and(|d| Instant::now() > d) {
                return Ok(false);
            }
            self.update_column(j, lambda, pen_diag, tol)?;
        }
        Ok(true)
    }

    /// Objective and KKT residual; `refresh` recomputes the running inverse
    /// from scratch to stop round-off drift.
    fn evaluate(&mut self, lambda: f64, pen_diag: bool, refresh: bool) -> Result<(f64, f64)> {
        let chol = Cholesky::new(self.theta.clone()).ok_or(CoreError::NotPositiveDefinite)?;
        let f = objective_with(&self.s, &self.theta, &chol, lambda, pen_diag);
        if refresh {
            self.w = chol.inverse();
        }
        Ok((f, kkt_residual(&self.s, &self.theta, &self.w, lambda, pen_diag)))
    }
}

/// Coordinate descent for `min ½ h θᵀAθ + sᵀθ + λ‖θ‖₁` over coordinates
/// other than `skip`, warm-started at `beta`. Full sweeps alternate with
/// feature-sign steps on the current nonzeros until no coordinate moves by
/// more than `tol` in gradient units.
fn lasso_cd(a: &DMatrix<f64>, h: f64, s: &[f64], skip: usize, lambda: f64, tol: f64, beta: &mut [f64]) {
    let p = beta.len();
    let col = |k: usize| &a.as_slice()[k * p..(k + 1) * p];
    let mut r: Vec<f64> = vec![0.0; p];
    for (k, &bk) in beta.iter().enumerate() {
        if bk != 0.0 {
            for (ri, ak) in r.iter_mut().zip(col(k).iter()) {
                *ri += ak * bk;
            }
        }
    }
    let pass = |coords: &mut dyn Iterator<Item = usize>, beta: &mut [f64], r: &mut [f64]| -> f64 {
        let mut maxd: f64 = 0.0;
        for i in coords {
            let hii = h * a[(i, i)];
            if i == skip || !(hii > 0.0) {
                continue;
            }
            let z = hii * beta[i] - (h * r[i] + s[i]);
            let new = z.signum() * (z.abs() - lambda).max(0.0) / hii;
            let delta = new - beta[i];
            if delta != 0.0 {
                beta[i] = new;
                for (rk, ak) in r.iter_mut().zip(col(i).iter()) {
                    *rk += ak * delta;
                }
                maxd = maxd.max(delta.abs() * hii);
            }
        }
        maxd
    };
    let apply = |i: usize, v: f64, beta: &mut [f64], r: &mut [f64]| {
        let delta = v - beta[i];
        beta[i] = v;
        for (rk, ak) in r.iter_mut().zip(col(i).iter()) {
            *rk += ak * delta;
        }
    };
    for _ in 0..CD_MAX_SWEEPS {
        if pass(&mut (0..p), beta, &mut r) <= tol {
            return;
        }
        // minimize over the orthant of the current signs; on a sign flip,
        // stop at the first zero crossing, drop that coordinate and repeat
        let mut active: Vec<usize> = (0..p).filter(|&i| beta[i] != 0.0).collect();
        if active.is_empty() {
            continue;
        }
        let chol = if active.len() <= EXACT_MAX_ACTIVE {
            Cholesky::new(DMatrix::from_fn(active.len(), active.len(), |x, y| h * a[(active[x], active[y])]))
        } else {
            None
        };
        let Some(mut chol) = chol else {
            for _ in 0..CD_MAX_SWEEPS {
                if pass(&mut active.iter().copied(), beta, &mut r) <= tol {
                    break;
                }
            }
            continue;
        };
        loop {
            let rhs = nalgebra::DVector::from_fn(active.len(), |x, _| -(s[active[x]] + lambda * beta[active[x]].signum()));
            let sol = chol.solve(&rhs);
            let mut step = 1.0;
            let mut hit = None;
            for (x, &i) in active.iter().enumerate() {
                if sol[x].signum() != beta[i].signum() {
                    let t = beta[i] / (beta[i] - sol[x]);
                    if t < step {
                        step = t;
                        hit = Some(x);
                    }
                }
            }
            for (x, &i) in active.iter().enumerate() {
                let v = if Some(x) == hit { 0.0 } else { beta[i] + step * (sol[x] - beta[i]) };
                apply(i, v, beta, &mut r);
            }
            let Some(x) = hit else { break };
            active.remove(x);
            if active.is_empty() || active.iter().any(|&i| beta[i] == 0.0) {
                break;
            }
            chol = chol.remove_column(x);
        }
    }
}

/// Connected components of the graph with an edge wherever `|S_ij| > λ`.
fn components(s: &DMatrix<f64>, lambda: f64) -> Vec<Vec<usize>> {
    let p = s.nrows();
    let mut parent: Vec<usize> = (0..p).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for j in 0..p {
        for i in 0..j {
            if s[(i, j)].abs() > lambda {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..p {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Checks symmetry and positive semidefiniteness (Cholesky of `S + τI`).
fn check_covariance(s: &DMatrix<f64>) -> Result<()> {
    check_square(s, "covariance")?;
    if s.iter().any(|x| !x.is_finite()) {
        return Err(CoreError::NonFinite.into());
    }
    let scale = s.diagonal().amax().max(f64::MIN_POSITIVE);
    let tau = 1e-10 * scale;
    let shifted = s + DMatrix::identity(s.nrows(), s.nrows()) * tau;
    if Cholesky::new(shifted).is_none() {
        return Err(EstError::NotPsd(-tau));
    }
    Ok(())
}

fn evaluate(blocks: &mut [Block], const_obj: f64, lambda: f64, pen_diag: bool, refresh: bool) -> Result<(f64, f64)> {
    let mut f = const_obj;
    let mut kkt = 0.0f64;
    for b in blocks {
        let (fb, kb) = b.evaluate(lambda, pen_diag, refresh)?;
        f += fb;
        kkt = kkt.max(kb);
    }
    Ok((f, kkt))
}

pub fn glasso_solve(s: &DMatrix<f64>, lambda: f64, params: &GlassoParams, warm: Option<&DMatrix<f64>>) -> Result<GlassoOutput> {
    check_covariance(s)?;
    if !(lambda >= 0.0) {
        return Err(EstError::Config(format!("penalty {lambda} must be non-negative")));
    }
    let p = s.nrows();
    let pen_diag = params.penalize_diagonal;
    let scale = s.diagonal().amax().max(f64::MIN_POSITIVE);
    let cd_tol = 0.1 * params.tol * scale;
    let mut theta = DMatrix::zeros(p, p);
    let mut blocks = Vec::new();
    let mut const_obj = 0.0;
    for idx in components(s, lambda) {
        if idx.len() == 1 {
            let i = idx[0];
            let w = s[(i, i)] + if pen_diag { lambda } else { 0.0 };
            if !(w > 0.0) {
                return Err(EstError::NotPsd(s[(i, i)]));
            }
            theta[(i, i)] = 1.0 / w;
            const_obj += s[(i, i)] / w + w.ln() + if pen_diag { lambda / w } else { 0.0 };
        } else {
            blocks.push(Block::new(idx, s, warm, lambda, pen_diag)?);
        }
    }
    let mut trace = Vec::new();
    let mut converged = blocks.is_empty();
    let mut iterations = 0;
    let mut kkt = 0.0;
    if blocks.is_empty() {
        trace.push(const_obj);
    }
    while !converged && iterations < params.max_iter {
        iterations += 1;
        let mut finished = true;
        for b in &mut blocks {
            finished &= b.sweep(lambda, pen_diag, cd_tol, params.deadline)?;
        }
        let mut refresh = iterations % REFRESH_EVERY == 0;
        let (f, k) = evaluate(&mut blocks, const_obj, lambda, pen_diag, refresh)?;
        kkt = k;
        if kkt <= params.tol * scale && !refresh {
            refresh = true;
            kkt = evaluate(&mut blocks, const_obj, lambda, pen_diag, refresh)?.1;
        }
        let prev = trace.last().copied();
        trace.push(f);
        converged = kkt <= params.tol * scale
            || params.objective_tol.zip(prev).is_some_and(|(t, p)| (p - f).abs() <= t * p.abs().max(1.0));
        if !finished || params.deadline.is_some_and(|d| Instant::now() > d) {
            break;
        }
    }
    for b in &blocks {
        for (a, &i) in b.idx.iter().enumerate() {
            for (c, &j) in b.idx.iter().enumerate() {
                theta[(i, j)] = b.theta[(a, c)];
            }
        }
    }
    Ok(GlassoOutput {
        theta,
        objective_trace: trace,
        iterations,
        converged,
        kkt,
    })
}

/// Sparse precision estimate from a dense sample covariance.
pub fn glasso(s: &DMatrix<f64>, lambda: f64, cfg: &EstimatorConfig) -> Result<FitResult> {
    cfg.validate()?;
    let start = Instant::now();
    let params = GlassoParams {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        penalize_diagonal: cfg.penalize_diagonal,
        deadline: cfg.deadline(),
        objective_tol: None,
    };
    let warm = match &cfg.init {
        crate::config::Init::Warm(f) if f.len() == 1 => Some(f.factor(0)),
        _ => None,
    };
    let out = glasso_solve(s, lambda, &params, warm)?;
    if !out.converged {
        log::warn!("glasso stopped after {} sweeps with KKT residual {:e}", out.iterations, out.kkt);
    }
    let factors = FactorSet::new(vec![out.theta.clone()])?;
    Ok(FitResult {
        method: Method::Glasso,
        model: Model::Structured(StructuredMatrix::dense(out.theta)?),
        factors: Some(factors),
        objective_trace: out.objective_trace,
        iterations: out.iterations,
        converged: out.converged,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        lambda: vec![lambda],
    })
}

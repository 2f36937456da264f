use serde::{Deserialize, Serialize};

use crate::error::{GenError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    #[serde(rename = "poisson_2d", alias = "poisson2d")]
    Poisson2D,
    PoissonAr1,
    ConvectionDiffusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProcessParams {
    /// AR(1) coefficient of the Poisson-AR process.
    pub a: f64,
    /// Diffusivity.
    pub theta: f64,
    /// Convection velocity.
    pub epsilon: f64,
    /// Mesh step.
    pub h: f64,
    /// Time step.
    pub dt: f64,
    /// Standard deviation of the white forcing.
    pub sigma_w: f64,
}

impl Default for ProcessParams {
    fn default() -> Self {
        Self {
            a: -0.5,
            theta: 0.05,
            epsilon: 0.0,
            h: 1.0,
            dt: 1.0,
            sigma_w: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    pub grid: (usize, usize),
    #[serde(rename = "T", alias = "t", default = "one")]
    pub t: usize,
    #[serde(default)]
    pub params: ProcessParams,
    #[serde(default)]
    pub seed: u64,
    /// Temporal processes are laid out as `(d1 d2, T)` tensors unless this is
    /// set, in which case the grid axes stay separate: `(d1, d2, T)`.
    #[serde(default)]
    pub split_grid: bool,
}

fn one() -> usize {
    1
}

impl ProcessSpec {
    pub fn new(kind: ProcessKind, grid: (usize, usize), t: usize) -> Self {
        Self {
            kind,
            grid,
            t,
            params: ProcessParams::default(),
            seed: 0,
            split_grid: false,
        }
    }

    pub fn with_params(mut self, params: ProcessParams) -> Self {
        self.params = params;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn spatial_size(&self) -> usize {
        self.grid.0 * self.grid.1
    }

    /// Length of `vec(U)`.
    pub fn total_size(&self) -> usize {
        self.spatial_size() * self.t
    }

    pub fn tensor_dims(&self) -> Vec<usize> {
        let (d1, d2) = self.grid;
        match self.kind {
            ProcessKind::Poisson2D => vec![d1, d2],
            _ if self.split_grid => vec![d1, d2, self.t],
            _ => vec![d1 * d2, self.t],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GenError::InvalidSpec(m));
        let p = &self.params;
        if self.grid.0 == 0 || self.grid.1 == 0 || self.t == 0 {
            return bad(format!("grid {:?} and T = {} must be positive", self.grid, self.t));
        }
        if !(p.sigma_w > 0.0 && p.sigma_w.is_finite()) {
            return bad(format!("sigma_w = {} must be positive", p.sigma_w));
        }
        match self.kind {
            ProcessKind::Poisson2D => {
                if self.t != 1 {
                    return bad(format!("Poisson2D is static but T = {}", self.t));
                }
            }
            ProcessKind::PoissonAr1 => {
                if !(p.a.abs() < 1.0) {
                    return bad(format!("|a| = {} must be < 1", p.a.abs()));
                }
            }
            ProcessKind::ConvectionDiffusion => {
                if !(p.theta > 0.0 && p.theta.is_finite()) {
                    return bad(format!("theta = {} must be positive", p.theta));
                }
                if !(p.h > 0.0 && p.h.is_finite()) || !(p.dt > 0.0 && p.dt.is_finite()) {
                    return bad(format!("h = {} and dt = {} must be positive", p.h, p.dt));
                }
                if !p.epsilon.is_finite() {
                    return bad("epsilon must be finite".into());
                }
            }
        }
        Ok(())
    }
}

use std::fmt;
use std::str::FromStr;

use mwcov_core::FactorSet;
use serde::{Deserialize, Serialize};

use crate::error::{EstError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "glasso")]
    Glasso,
    #[serde(rename = "kp-ls")]
    KpLs,
    #[serde(rename = "kpca")]
    Kpca,
    #[serde(rename = "tlasso")]
    Tlasso,
    #[serde(rename = "teralasso")]
    TeraLasso,
    #[serde(rename = "sg-palm")]
    SgPalm,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Glasso,
        Method::KpLs,
        Method::Kpca,
        Method::Tlasso,
        Method::TeraLasso,
        Method::SgPalm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Glasso => "glasso",
            Method::KpLs => "kp-ls",
            Method::Kpca => "kpca",
            Method::Tlasso => "tlasso",
            Method::TeraLasso => "teralasso",
            Method::SgPalm => "sg-palm",
        }
    }

    /// Whether the method estimates a precision (as opposed to a covariance).
    pub fn estimates_precision(self) -> bool {
        !matches!(self, Method::KpLs | Method::Kpca)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = EstError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == norm || (norm == "kglasso" && *m == Method::Tlasso))
            .ok_or_else(|| EstError::Config(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub enum Init {
    #[default]
    Identity,
    /// Diagonal factors matched to the per-mode marginal variances.
    Diagonal,
    Warm(FactorSet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Per-mode penalties; a single value is broadcast to every mode.
    pub lambda: Vec<f64>,
    /// Relative objective change (or scaled KKT residual for glasso) at
    /// which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub init: Init,
    pub penalize_diagonal: bool,
    pub subtract_mean: bool,
    /// Wall-clock budget in seconds; the fit stops unconverged when exceeded.
    pub time_limit: Option<f64>,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            lambda: vec![0.0],
            tol: 1e-5,
            max_iter: 500,
            inner_tol: 1e-6,
            inner_max_iter: 200,
            init: Init::Identity,
            penalize_diagonal: false,
            subtract_mean: true,
            time_limit: None,
            seed: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn with_lambda(lambda: Vec<f64>) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.inner_tol > 0.0) {
            return Err(EstError::Config("tolerances must be positive".into()));
        }
        if self.max_iter == 0 || self.inner_max_iter == 0 {
            return Err(EstError::Config("iteration caps must be at least 1".into()));
        }
        if self.lambda.is_empty() || self.lambda.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(EstError::Config(format!("penalties must be finite and non-negative, got {:?}", self.lambda)));
        }
        Ok(())
    }

    /// Penalties for `k` modes, broadcasting a single value.
    pub fn lambdas(&self, k: usize) -> Result<Vec<f64>> {
        match self.lambda.len() {
            1 => Ok(vec![self.lambda[0]; k]),
            n if n == k => Ok(self.lambda.clone()),
            n => Err(EstError::Config(format!("{n} penalties for {k} modes"))),
        }
    }

    pub(crate) fn deadline(&self) -> Option<std::time::Instant> {
        self.time_limit
            .map(|s| std::time::Instant::now() + std::time::Duration::from_secs_f64(s.max(0.0)))
    }
}

//! Declarative description of a comparison study.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use mwcov_estimators::Method;
use mwcov_generators::{ProcessKind, ProcessSpec};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// A fitting procedure: one of the covariance/precision estimators, or the
/// structure-free lasso forecaster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Algo {
    Estimator(Method),
    IndLasso,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Estimator(m) => m.name(),
            Algo::IndLasso => "ind-lasso",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        if norm == "ind-lasso" || norm == "indlasso" {
            return Ok(Algo::IndLasso);
        }
        norm.parse::<Method>().map(Algo::Estimator).map_err(|e| HarnessError::Spec(e.to_string()))
    }
}

impl TryFrom<String> for Algo {
    type Error = HarnessError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Algo> for String {
    fn from(a: Algo) -> String {
        a.name().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Fnorm,
    Mcc,
    Nrmse,
    Runtime,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Fnorm => "fnorm",
            Metric::Mcc => "mcc",
            Metric::Nrmse => "nrmse",
            Metric::Runtime => "runtime",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Eight log-spaced rate constants spanning `[1e-2, 1e1]`.
pub fn default_c_grid() -> Vec<f64> {
    (0..8).map(|i| 10f64.powf(-2.0 + 3.0 * i as f64 / 7.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Algo,
    /// Fixed per-mode penalties. When absent the penalty follows the
    /// method's rate rule, with the constant chosen from `c_grid`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default = "default_c_grid")]
    pub c_grid: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Rank cap for Kronecker PCA.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rank: Option<usize>,
    /// Per-fit wall-clock budget in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit: Option<f64>,
}

fn default_tol() -> f64 {
    1e-5
}

fn default_max_iter() -> usize {
    500
}

impl MethodSpec {
    pub fn new(method: Algo) -> Self {
        Self {
            method,
            lambda: None,
            c_grid: default_c_grid(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            max_rank: None,
            time_limit: None,
        }
    }

    pub fn estimator(method: Method) -> Self {
        Self::new(Algo::Estimator(method))
    }
}

/// Forecasting study: windows of `p` consecutive frames, the last frame
/// predicted from the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSpec {
    pub p: usize,
    /// Fraction of trajectories held out for testing.
    #[serde(default = "default_holdout")]
    pub holdout_fraction: f64,
    /// Fraction of the training trajectories used to pick the penalty.
    #[serde(default = "default_validation")]
    pub validation_fraction: f64,
}

fn default_holdout() -> f64 {
    0.2
}

fn default_validation() -> f64 {
    0.25
}

pub const DEFAULT_GLASSO_MAX_SIDE: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub process: ProcessSpec,
    /// Independent realizations per replicate.
    #[serde(rename = "N", alias = "n_samples")]
    pub n_samples: usize,
    pub replicates: Vec<u64>,
    pub methods: Vec<MethodSpec>,
    pub metrics: Vec<Metric>,
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<PredictionSpec>,
    /// Glasso cells above this side are censored rather than run.
    #[serde(default = "default_glasso_cap")]
    pub glasso_max_side: usize,
}

fn default_glasso_cap() -> usize {
    DEFAULT_GLASSO_MAX_SIDE
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Spec(m));
        self.process.validate()?;
        if self.methods.is_empty() || self.replicates.is_empty() || self.metrics.is_empty() {
            return bad("methods, replicates and metrics must be nonempty".into());
        }
        if self.n_samples == 0 {
            return bad("N must be at least 1".into());
        }
        for m in &self.methods {
            if m.lambda.is_none() && (m.c_grid.is_empty() || m.c_grid.iter().any(|c| !(*c > 0.0))) {
                return bad(format!("{}: rate constants must be positive", m.method));
            }
        }
        match &self.prediction {
            None => {
                if self.metrics.contains(&Metric::Nrmse) {
                    return bad("nrmse needs a prediction block".into());
                }
                if self.methods.iter().any(|m| m.method == Algo::IndLasso) {
                    return bad("ind-lasso only runs in prediction studies".into());
                }
            }
            Some(p) => {
                if self.metrics.iter().any(|m| matches!(m, Metric::Fnorm | Metric::Mcc)) {
                    return bad("prediction studies report nrmse and runtime only".into());
                }
                if p.p < 2 || p.p > self.process.t {
                    return bad(format!("window length {} must lie in [2, T = {}]", p.p, self.process.t));
                }
                let ok = |f: f64| f > 0.0 && f < 1.0;
                if !ok(p.holdout_fraction) || !ok(p.validation_fraction) {
                    return bad("holdout and validation fractions must lie in (0, 1)".into());
                }
                if self.process.kind == ProcessKind::Poisson2D {
                    return bad("prediction needs a temporal process".into());
                }
            }
        }
        Ok(())
    }

    /// Desk-scale version of the study: 6x6 grid, 20 frames, 50 samples.
    pub fn small(mut self) -> Self {
        if self.process.kind != ProcessKind::Poisson2D {
            self.process.grid = (6, 6);
            self.process.t = 20;
        }
        self.n_samples = 50;
        self
    }
}

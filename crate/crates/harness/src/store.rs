//! On-disk artifacts of the `generate`, `fit` and `eval` commands.
//!
//! A data directory holds `process.json`, the generating process, and
//! `sample_NNNN.mwt1` realizations. A fit directory holds `fit.json` plus
//! either `factor_K.mwt1` per mode (structured precisions) or a single
//! `precision.mwt1`. Matrices are stored as order-2 MWT1 tensors.

use std::fs;
use std::path::Path;

use mwcov_core::io::{load_mwt1, save_mwt1};
use mwcov_core::{DMatrix, FactorSet, Structure, StructuredMatrix, Tensor};
use mwcov_estimators::{FitResult, Model};
use mwcov_generators::ProcessSpec;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::pipeline::{precision_of, Precision};

pub fn save_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    Ok(save_mwt1(path, &Tensor::new(vec![m.nrows(), m.ncols()], m.as_slice().to_vec())?)?)
}

pub fn load_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let t = load_mwt1(path)?;
    match t.dims() {
        &[r, c] => Ok(DMatrix::from_column_slice(r, c, t.as_slice())),
        d => Err(HarnessError::Spec(format!("{} holds an order-{} tensor, not a matrix", path.display(), d.len()))),
    }
}

pub fn save_dataset(dir: &Path, process: &ProcessSpec, seed: u64, samples: &[Tensor]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("process.json"), serde_json::to_vec_pretty(&process.clone().with_seed(seed))?)?;
    for (i, x) in samples.iter().enumerate() {
        save_mwt1(dir.join(format!("sample_{i:04}.mwt1")), x)?;
    }
    Ok(())
}

pub fn load_process(dir: &Path) -> Result<ProcessSpec> {
    Ok(serde_json::from_slice(&fs::read(dir.join("process.json"))?)?)
}

pub fn load_samples(dir: &Path) -> Result<Vec<Tensor>> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("sample_") && n.ends_with(".mwt1")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(HarnessError::Spec(format!("no samples in {}", dir.display())));
    }
    paths.iter().map(|p| Ok(load_mwt1(p)?)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub method: String,
    pub seed: u64,
    pub lambda: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_seconds: f64,
    pub objective_trace: Vec<f64>,
    /// `kron_product`, `kron_sum`, `squared_kron_sum` or `dense`.
    pub structure: String,
    pub n_factors: usize,
}

fn structure_name(s: Structure) -> &'static str {
    match s {
        Structure::KronProduct => "kron_product",
        Structure::KronSum => "kron_sum",
        Structure::SquaredKronSum => "squared_kron_sum",
        Structure::Dense => "dense",
    }
}

/// Writes the precision implied by `fit` (covariance fits are inverted).
pub fn save_fit(dir: &Path, fit: &FitResult, seed: u64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let prec = precision_of(fit)?;
    let (structure, factors) = match &prec {
        Precision::Model(Model::Structured(s)) if s.factors().is_some() => (s.structure(), s.factors().unwrap().factors().to_vec()),
        _ => (Structure::Dense, Vec::new()),
    };
    if structure == Structure::Dense {
        save_matrix(&dir.join("precision.mwt1"), &prec.dense(usize::MAX)?)?;
    }
    for (k, f) in factors.iter().enumerate() {
        save_matrix(&dir.join(format!("factor_{k}.mwt1")), f)?;
    }
    let meta = FitMeta {
        method: fit.method.name().to_string(),
        seed,
        lambda: fit.lambda.clone(),
        iterations: fit.iterations,
        converged: fit.converged,
        wall_time_seconds: fit.wall_time_seconds,
        objective_trace: fit.objective_trace.clone(),
        structure: structure_name(structure).to_string(),
        n_factors: factors.len(),
    };
    fs::write(dir.join("fit.json"), serde_json::to_vec_pretty(&meta)?)?;
    Ok(())
}

pub fn load_fit(dir: &Path) -> Result<(FitMeta, Precision)> {
    let meta: FitMeta = serde_json::from_slice(&fs::read(dir.join("fit.json"))?)?;
    let factors = || -> Result<FactorSet> {
        let fs: Vec<DMatrix<f64>> = (0..meta.n_factors).map(|k| load_matrix(&dir.join(format!("factor_{k}.mwt1")))).collect::<Result<_>>()?;
        Ok(FactorSet::new(fs)?)
    };
    let model = match meta.structure.as_str() {
        "kron_product" => StructuredMatrix::kron_product(factors()?),
        "kron_sum" => StructuredMatrix::kron_sum(factors()?),
        "squared_kron_sum" => StructuredMatrix::squared_kron_sum(factors()?),
        "dense" => return Ok((meta, Precision::Dense(load_matrix(&dir.join("precision.mwt1"))?))),
        s => return Err(HarnessError::Spec(format!("unknown structure '{s}'"))),
    };
    Ok((meta, Precision::Model(Model::Structured(model))))
}

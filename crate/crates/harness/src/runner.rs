//! Grid execution with per-cell persistence.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mwcov_core::Tensor;
use mwcov_generators::GroundTruth;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::pipeline::{estimation_cell, generate, prediction_cell, CellOutcome};
use crate::record::{write_records_csv, ResultRecord};
use crate::spec::{ExperimentSpec, MethodSpec};
use crate::table::{emit_table, TableFormat};

pub const WORKERS_ENV: &str = "MWCOV_WORKERS";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; falls back to `MWCOV_WORKERS`, then to rayon's default.
    pub workers: Option<usize>,
    /// Stop after computing this many new cells (the rest stay pending).
    pub max_new_cells: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    /// Records of all finished cells in grid order.
    pub records: Vec<ResultRecord>,
    pub computed: usize,
    pub reused: usize,
    pub pending: usize,
}

impl RunSummary {
    pub fn any_failed(&self) -> bool {
        self.records.iter().any(|r| r.failed)
    }
}

/// Persisted outcome of one `(method, seed)` cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CellFile {
    method_index: usize,
    seed: u64,
    records: Vec<ResultRecord>,
}

fn cell_path(dir: &Path, index: usize, ms: &MethodSpec, seed: u64) -> PathBuf {
    dir.join(format!("{index:02}_{}_seed{seed}.json", ms.method))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| HarnessError::Io(e.error))?;
    Ok(())
}

fn workers(opts: &RunOptions) -> usize {
    opts.workers
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .filter(|&w| w > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

fn records_from(spec: &ExperimentSpec, ms: &MethodSpec, seed: u64, outcome: std::result::Result<CellOutcome, HarnessError>) -> Vec<ResultRecord> {
    match outcome {
        Ok(o) => {
            let fitted = |metric, value| ResultRecord {
                method: ms.method.name().to_string(),
                seed,
                metric,
                value: Some(value),
                c_used: o.c_used,
                lambda_used: o.lambda_used.clone(),
                wall_time_seconds: o.wall_time_seconds,
                iterations: o.iterations,
                converged: o.converged,
                failed: false,
                censored: false,
                error: None,
            };
            o.values.iter().map(|&(m, v)| fitted(m, v)).collect()
        }
        Err(e) => {
            let censored = matches!(e, HarnessError::Censored(_));
            if !censored {
                log::error!("{} seed {seed}: {e}", ms.method);
            }
            spec.metrics
                .iter()
                .map(|&metric| ResultRecord {
                    method: ms.method.name().to_string(),
                    seed,
                    metric,
                    value: None,
                    c_used: None,
                    lambda_used: Vec::new(),
                    wall_time_seconds: 0.0,
                    iterations: 0,
                    converged: false,
                    failed: !censored,
                    censored,
                    error: Some(e.to_string()),
                })
                .collect()
        }
    }
}

/// Runs one cell on a prepared replicate.
pub fn run_cell(spec: &ExperimentSpec, ms: &MethodSpec, seed: u64, gt: &GroundTruth, data: &[Tensor]) -> Vec<ResultRecord> {
    let start = Instant::now();
    let outcome = match &spec.prediction {
        None => estimation_cell(ms, gt, data, &spec.metrics, spec.glasso_max_side),
        Some(p) => prediction_cell(ms, data, p, &spec.metrics, spec.glasso_max_side),
    };
    log::info!("{} seed {seed} done in {:.2}s", ms.method, start.elapsed().as_secs_f64());
    records_from(spec, ms, seed, outcome)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRecord>> {
    Ok(run_experiment_with(spec, &RunOptions::default())?.records)
}

/// Runs every pending `(method, seed)` cell, reusing cells already on disk,
/// then writes `results.csv` and `table.csv` once the grid is complete.
pub fn run_experiment_with(spec: &ExperimentSpec, opts: &RunOptions) -> Result<RunSummary> {
    spec.validate()?;
    let cells_dir = spec.output_dir.join("cells");
    fs::create_dir_all(&cells_dir)?;

    let mut done: BTreeMap<(u64, usize), Vec<ResultRecord>> = BTreeMap::new();
    let mut pending = Vec::new();
    for &seed in &spec.replicates {
        for (i, ms) in spec.methods.iter().enumerate() {
            let path = cell_path(&cells_dir, i, ms, seed);
            match fs::read(&path).ok().and_then(|b| serde_json::from_slice::<CellFile>(&b).ok()) {
                Some(c) if c.method_index == i && c.seed == seed => {
                    done.insert((seed, i), c.records);
                }
                _ => pending.push((seed, i)),
            }
        }
    }
    let reused = done.len();
    let todo: Vec<(u64, usize)> = match opts.max_new_cells {
        Some(k) => pending.iter().copied().take(k).collect(),
        None => pending.clone(),
    };

    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers(opts)).build().map_err(|e| HarnessError::Spec(e.to_string()))?;
    let mut seeds: Vec<u64> = todo.iter().map(|c| c.0).collect();
    seeds.dedup();
    let replicates: BTreeMap<u64, (GroundTruth, Vec<Tensor>)> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| Ok((s, generate(&spec.process, spec.n_samples, s)?)))
            .collect::<Result<_>>()
    })?;
    let fresh: Vec<((u64, usize), Vec<ResultRecord>)> = pool.install(|| {
        todo.par_iter()
            .map(|&(seed, i)| {
                let (gt, data) = &replicates[&seed];
                let ms = &spec.methods[i];
                let records = run_cell(spec, ms, seed, gt, data);
                let file = CellFile { method_index: i, seed, records: records.clone() };
                write_atomic(&cell_path(&cells_dir, i, ms, seed), &serde_json::to_vec_pretty(&file)?)?;
                Ok(((seed, i), records))
            })
            .collect::<Result<_>>()
    })?;
    let computed = fresh.len();
    done.extend(fresh);

    // grid order: seeds as listed, methods as listed
    let mut records = Vec::new();
    for &seed in &spec.replicates {
        for i in 0..spec.methods.len() {
            if let Some(r) = done.get(&(seed, i)) {
                records.extend(r.iter().cloned());
            }
        }
    }
    let pending = pending.len() - computed;
    if pending == 0 {
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &records)?;
        write_atomic(&spec.output_dir.join("results.csv"), &buf)?;
        emit_table(&records, TableFormat::Csv, false, &spec.output_dir.join("table.csv"))?;
    }
    Ok(RunSummary { records, computed, reused, pending })
}

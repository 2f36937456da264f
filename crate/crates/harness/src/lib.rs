//! Seeded comparison studies: generate, fit over penalty grids, evaluate,
//! and persist records, tables and heatmaps.

pub mod error;
pub mod heatmap;
pub mod pipeline;
pub mod record;
pub mod runner;
pub mod spec;
pub mod store;
pub mod table;

pub use error::{HarnessError, Result};
pub use heatmap::{emit_heatmap, heatmap_bytes};
pub use record::{read_records_csv, write_records_csv, ResultRecord};
pub use runner::{run_cell, run_experiment, run_experiment_with, RunOptions, RunSummary, WORKERS_ENV};
pub use spec::{default_c_grid, Algo, ExperimentSpec, MethodSpec, Metric, PredictionSpec};
pub use table::{emit_table, mean_se, read_table_csv, summarize, write_table, TableFormat, TableRow};

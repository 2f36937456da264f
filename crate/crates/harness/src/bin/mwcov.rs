use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mwcov_estimators::{lambda_from_rate, Method, SampleStats};
use mwcov_generators::{ProcessKind, ProcessParams, ProcessSpec};
use mwcov_harness::pipeline::{fit_once, fnorm, generate, support_mcc};
use mwcov_harness::store::{load_fit, load_matrix, load_process, load_samples, save_dataset, save_fit};
use mwcov_harness::{emit_heatmap, emit_table, run_experiment_with, ExperimentSpec, HarnessError, MethodSpec, Result, RunOptions, TableFormat, WORKERS_ENV};
use serde_json::json;

#[derive(Parser)]
#[command(name = "mwcov", version, about = "Multiway precision estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw realizations of a process into a data directory.
    Generate(GenerateArgs),
    /// Fit one estimator to a data directory.
    Fit(FitArgs),
    /// Score a fit directory against the process that generated the data.
    Eval(EvalArgs),
    /// Run an experiment grid from a JSON spec.
    Bench(BenchArgs),
    /// Render a matrix or fitted precision as a PGM image.
    Heatmap(HeatmapArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Process spec as JSON; overrides the individual flags.
    #[arg(long)]
    process: Option<PathBuf>,
    #[arg(long, default_value = "poisson_ar1", value_parser = parse_kind)]
    kind: ProcessKind,
    /// Spatial grid, e.g. `8x8`.
    #[arg(long, default_value = "4x4", value_parser = parse_grid)]
    grid: (usize, usize),
    #[arg(short = 'T', long = "frames", default_value_t = 10)]
    t: usize,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    #[arg(long)]
    sigma_w: Option<f64>,
    #[arg(long)]
    split_grid: bool,
    #[arg(short = 'N', long = "samples", default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    method: Method,
    /// Comma-separated per-mode penalties.
    #[arg(long, value_delimiter = ',', conflicts_with = "c")]
    lambda: Option<Vec<f64>>,
    /// Rate constant; the penalty follows the method's rate rule.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long)]
    max_rank: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    fit: PathBuf,
    /// Data directory whose `process.json` defines the truth.
    #[arg(long)]
    truth: PathBuf,
    /// Metrics JSON; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    spec: PathBuf,
    /// Desk-scale preset: 6x6 grid, 20 frames, 50 samples.
    #[arg(long)]
    small: bool,
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: TableFormat,
    /// Methods as columns.
    #[arg(long)]
    transpose: bool,
}

#[derive(Args)]
struct HeatmapArgs {
    /// An order-2 MWT1 file or a fit directory.
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Magnitudes at or below this are drawn as zeros.
    #[arg(long)]
    threshold: Option<f64>,
    /// Put zeros on the common gray scale instead of forcing them white.
    #[arg(long)]
    no_zero_white: bool,
}

fn parse_kind(s: &str) -> std::result::Result<ProcessKind, String> {
    serde_json::from_value(json!(s.replace('-', "_"))).map_err(|e| e.to_string())
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X', ',']).ok_or_else(|| format!("expected AxB, got '{s}'"))?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

fn write_json(path: Option<&Path>, v: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    match path {
        Some(p) => fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> Result<bool> {
    let process = match &a.process {
        Some(p) => serde_json::from_slice(&fs::read(p)?)?,
        None => {
            let d = ProcessParams::default();
            let params = ProcessParams {
                a: a.a.unwrap_or(d.a),
                theta: a.theta.unwrap_or(d.theta),
                epsilon: a.epsilon.unwrap_or(d.epsilon),
                sigma_w: a.sigma_w.unwrap_or(d.sigma_w),
                ..d
            };
            let mut p = ProcessSpec::new(a.kind, a.grid, a.t).with_params(params);
            p.split_grid = a.split_grid;
            p
        }
    };
    let (_, samples) = generate(&process, a.n, a.seed)?;
    save_dataset(&a.out, &process, a.seed, &samples)?;
    log::info!("wrote {} samples to {}", samples.len(), a.out.display());
    Ok(true)
}

fn cmd_fit(a: FitArgs) -> Result<bool> {
    let samples = load_samples(&a.data)?;
    let seed = load_process(&a.data).map(|p| p.seed).unwrap_or(0);
    let stats = SampleStats::from_data(&samples, true)?;
    let lambda = match a.lambda {
        Some(l) => l,
        None => lambda_from_rate(a.method, stats.dims(), samples.len(), a.c)?,
    };
    let ms = MethodSpec {
        tol: a.tol,
        max_iter: a.max_iter,
        max_rank: a.max_rank,
        ..MethodSpec::estimator(a.method)
    };
    let fit = fit_once(&ms, a.method, &stats, lambda)?;
    save_fit(&a.out, &fit, seed)?;
    log::info!("{} fit in {:.3}s, {} iterations, converged {}", a.method, fit.wall_time_seconds, fit.iterations, fit.converged);
    Ok(true)
}

fn cmd_eval(a: EvalArgs) -> Result<bool> {
    let (meta, prec) = load_fit(&a.fit)?;
    let gt = mwcov_generators::build(&load_process(&a.truth)?)?;
    if gt.side() != prec.side() {
        return Err(HarnessError::Spec(format!("fit side {} vs truth side {}", prec.side(), gt.side())));
    }
    let m = support_mcc(&prec, &gt)?;
    let v = json!({
        "method": meta.method,
        "seed": meta.seed,
        "lambda_used": meta.lambda,
        "wall_time_seconds": meta.wall_time_seconds,
        "iterations": meta.iterations,
        "converged": meta.converged,
        "fnorm": fnorm(&prec, &gt)?,
        "mcc": m.value,
        "mcc_degenerate": m.degenerate,
    });
    write_json(a.out.as_deref(), &v)?;
    Ok(true)
}

fn cmd_bench(a: BenchArgs) -> Result<bool> {
    let mut spec: ExperimentSpec = serde_json::from_slice(&fs::read(&a.spec)?)?;
    if a.small {
        spec = spec.small();
    }
    if let Some(dir) = a.output_dir {
        spec.output_dir = dir;
    }
    let summary = run_experiment_with(&spec, &RunOptions { workers: a.workers, max_new_cells: None })?;
    let ext = if a.format == TableFormat::Json { "json" } else { "csv" };
    let table = spec.output_dir.join(if a.transpose { format!("table_wide.{ext}") } else { format!("table.{ext}") });
    emit_table(&summary.records, a.format, a.transpose, &table)?;
    log::info!("{} cells computed, {} reused; table at {}", summary.computed, summary.reused, table.display());
    let failed = summary.records.iter().filter(|r| r.failed).count();
    if failed > 0 {
        eprintln!("{failed} records come from failed cells");
    }
    Ok(failed == 0)
}

fn cmd_heatmap(a: HeatmapArgs) -> Result<bool> {
    let m = if a.input.is_dir() {
        load_fit(&a.input)?.1.dense(mwcov_core::structured::DEFAULT_DENSE_CAP)?
    } else {
        load_matrix(&a.input)?
    };
    emit_heatmap(&m, &a.out, !a.no_zero_white, a.threshold)?;
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Heatmap(a) => cmd_heatmap(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

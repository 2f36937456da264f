//! Summary tables: mean and standard error over seeds.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::record::ResultRecord;
use crate::spec::Metric;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

impl FromStr for TableFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(HarnessError::Spec(format!("unknown table format '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub method: String,
    pub metric: Metric,
    pub mean: Option<f64>,
    /// Standard error of the mean; zero for a single value.
    pub se: Option<f64>,
    /// Seeds contributing a value.
    pub n: usize,
    pub failed: usize,
    pub censored: usize,
}

pub fn mean_se(values: &[f64]) -> Option<(f64, f64)> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some((mean, (var / n as f64).sqrt()))
}

/// One row per `(method, metric)`, in order of first appearance.
pub fn summarize(records: &[ResultRecord]) -> Result<Vec<TableRow>> {
    if records.is_empty() {
        return Err(HarnessError::Spec("no records to tabulate".into()));
    }
    let mut order = Vec::new();
    let mut groups: BTreeMap<(String, Metric), Vec<&ResultRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.method.clone(), r.metric);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    Ok(order
        .into_iter()
        .map(|key| {
            let rs = &groups[&key];
            let values: Vec<f64> = rs.iter().filter_map(|r| r.value).collect();
            let stats = mean_se(&values);
            TableRow {
                method: key.0,
                metric: key.1,
                mean: stats.map(|s| s.0),
                se: stats.map(|s| s.1),
                n: values.len(),
                failed: rs.iter().filter(|r| r.failed).count(),
                censored: rs.iter().filter(|r| r.censored).count(),
            }
        })
        .collect())
}

#[derive(Debug, Serialize)]
struct WideRow {
    metric: Metric,
    stat: &'static str,
    values: BTreeMap<String, Option<f64>>,
}

fn fmt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `rows`; with `transpose` the methods become columns and each
/// metric contributes a mean row and an SE row.
pub fn write_table<W: Write>(rows: &[TableRow], format: TableFormat, transpose: bool, mut w: W) -> Result<()> {
    match (format, transpose) {
        (TableFormat::Csv, false) => {
            let mut out = csv::Writer::from_writer(w);
            for r in rows {
                out.serialize(r)?;
            }
            out.flush()?;
        }
        (TableFormat::Json, false) => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
        (_, true) => {
            let mut methods: Vec<&str> = Vec::new();
            let mut metrics: Vec<Metric> = Vec::new();
            for r in rows {
                if !methods.contains(&r.method.as_str()) {
                    methods.push(&r.method);
                }
                if !metrics.contains(&r.metric) {
                    metrics.push(r.metric);
                }
            }
            let find = |method: &str, metric| rows.iter().find(|r| r.method == method && r.metric == metric);
            let mut wide = Vec::new();
            for &metric in &metrics {
                for (stat, pick) in [("mean", (|r: &TableRow| r.mean) as fn(&TableRow) -> Option<f64>), ("se", |r: &TableRow| r.se)] {
                    let values = methods.iter().map(|&m| (m.to_string(), find(m, metric).and_then(pick))).collect();
                    wide.push((metric, stat, values));
                }
            }
            if format == TableFormat::Json {
                let rows: Vec<WideRow> = wide.into_iter().map(|(metric, stat, values)| WideRow { metric, stat, values }).collect();
                serde_json::to_writer_pretty(&mut w, &rows)?;
                writeln!(w)?;
            } else {
                let mut out = csv::Writer::from_writer(w);
                let mut header = vec!["metric", "stat"];
                header.extend(&methods);
                out.write_record(&header)?;
                for (metric, stat, values) in wide {
                    let mut rec = vec![metric.name().to_string(), stat.to_string()];
                    rec.extend(methods.iter().map(|m| fmt(values[*m])));
                    out.write_record(&rec)?;
                }
                out.flush()?;
            }
        }
    }
    Ok(())
}

pub fn read_table_csv<R: Read>(r: R) -> Result<Vec<TableRow>> {
    Ok(csv::Reader::from_reader(r).deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn emit_table(records: &[ResultRecord], format: TableFormat, transpose: bool, path: &Path) -> Result<()> {
    let rows = summarize(records)?;
    let mut w = BufWriter::new(File::create(path)?);
    write_table(&rows, format, transpose, &mut w)?;
    w.flush()?;
    Ok(())
}

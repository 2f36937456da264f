use serde::{Deserialize, Serialize};

use crate::spec::Metric;

/// One `(method, seed, metric)` outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub method: String,
    pub seed: u64,
    pub metric: Metric,
    /// `None` when the cell failed or was censored.
    pub value: Option<f64>,
    /// Selected rate constant, when a grid was searched.
    pub c_used: Option<f64>,
    pub lambda_used: Vec<f64>,
    pub wall_time_seconds: f64,
    pub iterations: usize,
    pub converged: bool,
    pub failed: bool,
    pub censored: bool,
    pub error: Option<String>,
}

impl ResultRecord {
    /// Same outcome up to timing.
    pub fn same_result(&self, other: &Self) -> bool {
        let strip = |r: &Self| {
            let mut r = r.clone();
            r.wall_time_seconds = 0.0;
            if r.metric == Metric::Runtime {
                r.value = r.value.map(|_| 0.0);
            }
            r
        };
        strip(self) == strip(other)
    }
}

/// Flat CSV row of a [`ResultRecord`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct CsvRecord {
    method: String,
    seed: u64,
    metric: Metric,
    value: Option<f64>,
    c_used: Option<f64>,
    lambda_used: String,
    wall_time_seconds: f64,
    iterations: usize,
    converged: bool,
    failed: bool,
    censored: bool,
    error: Option<String>,
}

impl From<&ResultRecord> for CsvRecord {
    fn from(r: &ResultRecord) -> Self {
        Self {
            method: r.method.clone(),
            seed: r.seed,
            metric: r.metric,
            value: r.value,
            c_used: r.c_used,
            lambda_used: r.lambda_used.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(";"),
            wall_time_seconds: r.wall_time_seconds,
            iterations: r.iterations,
            converged: r.converged,
            failed: r.failed,
            censored: r.censored,
            error: r.error.clone(),
        }
    }
}

impl TryFrom<CsvRecord> for ResultRecord {
    type Error = std::num::ParseFloatError;

    fn try_from(r: CsvRecord) -> std::result::Result<Self, Self::Error> {
        let lambda_used = if r.lambda_used.is_empty() {
            Vec::new()
        } else {
            r.lambda_used.split(';').map(str::parse).collect::<std::result::Result<_, _>>()?
        };
        Ok(Self {
            method: r.method,
            seed: r.seed,
            metric: r.metric,
            value: r.value,
            c_used: r.c_used,
            lambda_used,
            wall_time_seconds: r.wall_time_seconds,
            iterations: r.iterations,
            converged: r.converged,
            failed: r.failed,
            censored: r.censored,
            error: r.error,
        })
    }
}

pub fn write_records_csv<W: std::io::Write>(w: W, records: &[ResultRecord]) -> crate::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(CsvRecord::from(r))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records_csv<R: std::io::Read>(r: R) -> crate::Result<Vec<ResultRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize::<CsvRecord>()
        .map(|row| {
            ResultRecord::try_from(row?).map_err(|e| crate::HarnessError::Spec(format!("bad lambda list: {e}")))
        })
        .collect()
}

//! Row aggregation and CSV persistence.

use super::{HarnessError, ResultRow};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// Grouped mean and standard error for one (grid point, estimator,
/// metric) cell; `failures` counts failed rows of the same estimator at
/// the same grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub grid: String,
    pub estimator: String,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
    pub failures: usize,
}

/// Groups rows by (grid, estimator, metric) and reports mean and standard
/// error (sample standard deviation over √count; zero for singletons).
/// Failure rows are excluded from the statistics and surface in the
/// `failures` column.
pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryRow>, HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::Empty);
    }
    let mut groups: BTreeMap<(String, String, String), Vec<f64>> = BTreeMap::new();
    let mut failures: BTreeMap<(String, String), usize> = BTreeMap::new();
    for row in rows {
        if row.metric == "failure" {
            *failures.entry((row.grid.clone(), row.estimator.clone())).or_insert(0) += 1;
        } else {
            groups
                .entry((row.grid.clone(), row.estimator.clone(), row.metric.clone()))
                .or_default()
                .push(row.value);
        }
    }

    let mut out = Vec::new();
    for ((grid, estimator, metric), values) in &groups {
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let stderr = if count >= 2 {
            let var =
                values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count as f64 - 1.0);
            (var / count as f64).sqrt()
        } else {
            0.0
        };
        let fail = failures.get(&(grid.clone(), estimator.clone())).copied().unwrap_or(0);
        out.push(SummaryRow {
            grid: grid.clone(),
            estimator: estimator.clone(),
            metric: metric.clone(),
            mean,
            stderr,
            count,
            failures: fail,
        });
    }
    // estimators that only ever failed still deserve a line
    for ((grid, estimator), fail) in &failures {
        let seen = groups.keys().any(|(g, e, _)| g == grid && e == estimator);
        if !seen {
            out.push(SummaryRow {
                grid: grid.clone(),
                estimator: estimator.clone(),
                metric: "failure".into(),
                mean: 0.0,
                stderr: 0.0,
                count: 0,
                failures: *fail,
            });
        }
    }
    Ok(out)
}

/// Writes rows in the canonical CSV layout (header, comma-separated,
/// UTF-8, LF line endings).
pub fn write_rows<W: Write>(w: W, rows: &[ResultRow]) -> Result<(), HarnessError> {
    let mut writer = csv::WriterBuilder::new().from_writer(w);
    writer.write_record([
        "experiment",
        "trial",
        "grid",
        "estimator",
        "metric",
        "value",
        "wall_ms",
        "metadata",
    ])?;
    for row in rows {
        writer.write_record([
            row.experiment.as_str(),
            &row.trial.to_string(),
            row.grid.as_str(),
            row.estimator.as_str(),
            row.metric.as_str(),
            &row.value.to_string(),
            &row.wall_ms.to_string(),
            row.metadata.as_str(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a results CSV back into rows.
pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new().from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 8 {
            return Err(HarnessError::Run(format!(
                "expected 8 CSV columns, found {}",
                record.len()
            )));
        }
        let parse_f64 = |idx: usize| -> Result<f64, HarnessError> {
            record[idx]
                .parse()
                .map_err(|e| HarnessError::Run(format!("bad number '{}': {e}", &record[idx])))
        };
        rows.push(ResultRow {
            experiment: record[0].to_string(),
            trial: record[1]
                .parse()
                .map_err(|e| HarnessError::Run(format!("bad trial '{}': {e}", &record[1])))?,
            grid: record[2].to_string(),
            estimator: record[3].to_string(),
            metric: record[4].to_string(),
            value: parse_f64(5)?,
            wall_ms: parse_f64(6)?,
            metadata: record[7].to_string(),
        });
    }
    Ok(rows)
}

/// Writes a summary table as CSV.
pub fn write_summary<W: Write>(w: W, rows: &[SummaryRow]) -> Result<(), HarnessError> {
    let mut writer = csv::WriterBuilder::new().from_writer(w);
    writer.write_record(["grid", "estimator", "metric", "mean", "stderr", "count", "failures"])?;
    for row in rows {
        writer.write_record([
            row.grid.as_str(),
            row.estimator.as_str(),
            row.metric.as_str(),
            &row.mean.to_string(),
            &row.stderr.to_string(),
            &row.count.to_string(),
            &row.failures.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

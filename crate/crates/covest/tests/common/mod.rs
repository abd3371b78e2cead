//! Shared helpers for the integration suites.
#![allow(dead_code)]

use covest::harness::SummaryRow;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn stderr(values: &[f64]) -> f64 {
    let m = mean(values);
    if values.len() < 2 {
        return 0.0;
    }
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    (var / values.len() as f64).sqrt()
}

/// Looks up the summary cell for (grid, estimator, metric).
pub fn cell<'a>(
    summary: &'a [SummaryRow],
    grid: &str,
    estimator: &str,
    metric: &str,
) -> &'a SummaryRow {
    summary
        .iter()
        .find(|r| r.grid == grid && r.estimator == estimator && r.metric == metric)
        .unwrap_or_else(|| panic!("no summary cell for ({grid}, {estimator}, {metric})"))
}

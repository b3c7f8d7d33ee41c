//! Cleaning rules for the cardiac arrhythmia table.

use std::collections::BTreeMap;

use ndarray::{Array2, Axis};

use super::RawTable;

/// Columns with more than this fraction of missing entries are dropped.
pub const MAX_MISSING_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanReport {
    pub instances: usize,
    pub features: usize,
    pub classes: usize,
    pub dropped_constant: usize,
    pub dropped_missing: usize,
    pub dropped_classes: Vec<i64>,
}

impl CleanReport {
    pub fn is_empty(&self) -> bool {
        self.instances == 0 || self.features == 0
    }
}

/// Drops small classes, then constant and mostly-missing columns, imputes the
/// remaining gaps with column means and z-scores every column (population std).
///
/// Small classes go first so no surviving column can become constant after
/// rows are removed; this keeps the operation idempotent.
pub fn clean_arrhythmia(table: &RawTable, min_class_size: usize) -> (RawTable, CleanReport) {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &l in &table.labels {
        *counts.entry(l).or_default() += 1;
    }
    let dropped_classes: Vec<i64> = counts
        .iter()
        .filter(|(_, &c)| c < min_class_size)
        .map(|(&l, _)| l)
        .collect();
    let keep_rows: Vec<usize> = (0..table.n_rows())
        .filter(|&i| !dropped_classes.contains(&table.labels[i]))
        .collect();
    let sub = table.select_rows(&keep_rows);
    let n = sub.n_rows();

    let mut keep_cols = Vec::new();
    let (mut dropped_constant, mut dropped_missing) = (0, 0);
    for j in 0..sub.n_features() {
        let col = sub.rows.column(j);
        let mask = sub.missing.column(j);
        let observed: Vec<f64> = col.iter().zip(mask).filter(|(_, &m)| !m).map(|(&v, _)| v).collect();
        if n > 0 && (n - observed.len()) as f64 > MAX_MISSING_FRACTION * n as f64 {
            dropped_missing += 1;
        } else if observed.windows(2).all(|w| w[0] == w[1]) {
            dropped_constant += 1;
        } else {
            keep_cols.push(j);
        }
    }

    let mut rows = Array2::zeros((n, keep_cols.len()));
    for (k, &j) in keep_cols.iter().enumerate() {
        let col = sub.rows.column(j);
        let mask = sub.missing.column(j);
        let observed: Vec<f64> = col.iter().zip(mask).filter(|(_, &m)| !m).map(|(&v, _)| v).collect();
        let fill = observed.iter().sum::<f64>() / observed.len() as f64;
        let mut out = rows.column_mut(k);
        for i in 0..n {
            out[i] = if mask[i] { fill } else { col[i] };
        }
        let mean = out.sum() / n as f64;
        let std = (out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        if std > 0.0 {
            out.mapv_inplace(|v| (v - mean) / std);
        } else {
            out.fill(0.0);
        }
    }

    let feature_names = sub
        .feature_names
        .as_ref()
        .map(|names| keep_cols.iter().map(|&j| names[j].clone()).collect());
    let classes = counts.len() - dropped_classes.len();
    let report = CleanReport {
        instances: n,
        features: keep_cols.len(),
        classes,
        dropped_constant,
        dropped_missing,
        dropped_classes,
    };
    let missing = Array2::from_elem(rows.dim(), false);
    let cleaned = RawTable {
        rows,
        missing,
        labels: sub.labels,
        feature_names,
    };
    debug_assert_eq!(cleaned.missing.len_of(Axis(1)), report.features);
    (cleaned, report)
}

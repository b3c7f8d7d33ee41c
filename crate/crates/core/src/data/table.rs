//! Dense comma-separated tables.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use ndarray::Array2;

use super::RawTable;
use crate::error::{DsvmError, Result};

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f == "?"
}

fn parse_label(field: &str, line: usize) -> Result<i64> {
    let f = field.trim();
    let f = f.strip_prefix('+').unwrap_or(f);
    f.parse::<i64>()
        .ok()
        .or_else(|| f.parse::<f64>().ok().filter(|v| v.fract() == 0.0).map(|v| v as i64))
        .ok_or_else(|| DsvmError::Parse {
            line,
            message: format!("invalid label {field:?}"),
        })
}

fn build(
    values: Vec<f64>,
    missing: Vec<bool>,
    labels: Vec<i64>,
    m: usize,
    names: Option<Vec<String>>,
) -> Result<RawTable> {
    let n = labels.len();
    let shape_err = |e: ndarray::ShapeError| DsvmError::InvalidData(e.to_string());
    Ok(RawTable {
        rows: Array2::from_shape_vec((n, m), values).map_err(shape_err)?,
        missing: Array2::from_shape_vec((n, m), missing).map_err(shape_err)?,
        labels,
        feature_names: names,
    })
}

/// Reads rows of fields; `label_col` picks the label column out of each record.
fn parse_records<R: Read>(
    reader: R,
    has_header: bool,
    label_col: impl Fn(&csv::StringRecord) -> Result<usize>,
) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header = if has_header { Some(rdr.headers()?.clone()) } else { None };
    let mut label_idx = match &header {
        Some(h) => Some(label_col(h)?),
        None => None,
    };
    let names = header.as_ref().map(|h| {
        h.iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != label_idx)
            .map(|(_, s)| s.to_string())
            .collect::<Vec<_>>()
    });
    let mut width = header.as_ref().map(|h| h.len());
    let (mut values, mut missing, mut labels) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let li = match label_idx {
            Some(i) => i,
            None => {
                let i = label_col(&rec)?;
                label_idx = Some(i);
                i
            }
        };
        match width {
            Some(w) if w != rec.len() => {
                return Err(DsvmError::Parse {
                    line,
                    message: format!("expected {w} fields, found {}", rec.len()),
                })
            }
            None => width = Some(rec.len()),
            _ => {}
        }
        for (i, field) in rec.iter().enumerate() {
            if i == li {
                labels.push(parse_label(field, line)?);
            } else if is_missing(field) {
                values.push(0.0);
                missing.push(true);
            } else {
                let v: f64 = field.parse().map_err(|_| DsvmError::Parse {
                    line,
                    message: format!("invalid value {field:?} in column {}", i + 1),
                })?;
                values.push(v);
                missing.push(false);
            }
        }
    }
    let m = width.map_or(0, |w| w.saturating_sub(1));
    build(values, missing, labels, m, names)
}

/// CSV with a header row; the column named `label` holds the class.
pub fn parse_dense_csv<R: Read>(reader: R) -> Result<RawTable> {
    parse_records(reader, true, |h| {
        h.iter()
            .position(|c| c == "label")
            .ok_or_else(|| DsvmError::InvalidData("no `label` column in header".into()))
    })
}

pub fn load_dense_csv(path: &Path) -> Result<RawTable> {
    parse_dense_csv(BufReader::new(File::open(path)?))
}

/// UCI Arrhythmia layout: no header, `?` for missing values, class in the last column.
pub fn parse_arrhythmia<R: Read>(reader: R) -> Result<RawTable> {
    parse_records(reader, false, |rec| {
        rec.len()
            .checked_sub(1)
            .ok_or_else(|| DsvmError::InvalidData("empty record".into()))
    })
}

pub fn load_arrhythmia(path: &Path) -> Result<RawTable> {
    parse_arrhythmia(BufReader::new(File::open(path)?))
}

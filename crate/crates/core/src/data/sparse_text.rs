//! Sparse text format: one sample per line,
//! `<label> <index>:<value> <index>:<value> ...` with 1-based strictly
//! ascending indices. Text after `#` is ignored, absent indices are zeros.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::Array2;

use super::RawTable;
use crate::error::{DsvmError, Result};

fn parse_label(tok: &str, line: usize) -> Result<i64> {
    let trimmed = tok.strip_prefix('+').unwrap_or(tok);
    if let Ok(v) = trimmed.parse::<i64>() {
        return Ok(v);
    }
    match trimmed.parse::<f64>() {
        Ok(v) if v.fract() == 0.0 && v.is_finite() => Ok(v as i64),
        _ => Err(DsvmError::Parse {
            line,
            message: format!("invalid label {tok:?}"),
        }),
    }
}

/// Parses the format from any reader. `dim` fixes the feature count; otherwise
/// it is the largest index seen.
pub fn parse_sparse_text<R: BufRead>(reader: R, dim: Option<usize>) -> Result<RawTable> {
    let mut labels = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let label = parse_label(toks.next().expect("non-empty line"), lineno)?;
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in toks {
            let (idx, val) = tok.split_once(':').ok_or_else(|| DsvmError::Parse {
                line: lineno,
                message: format!("expected index:value, found {tok:?}"),
            })?;
            let idx: usize = idx.parse().map_err(|_| DsvmError::Parse {
                line: lineno,
                message: format!("invalid index {idx:?}"),
            })?;
            if idx == 0 {
                return Err(DsvmError::Parse {
                    line: lineno,
                    message: "indices are 1-based".into(),
                });
            }
            if idx <= last {
                return Err(DsvmError::Parse {
                    line: lineno,
                    message: format!("index {idx} does not ascend (previous {last})"),
                });
            }
            let val: f64 = val.parse().map_err(|_| DsvmError::Parse {
                line: lineno,
                message: format!("invalid value {val:?}"),
            })?;
            if !val.is_finite() {
                return Err(DsvmError::Parse {
                    line: lineno,
                    message: format!("non-finite value {val}"),
                });
            }
            if let Some(d) = dim {
                if idx > d {
                    return Err(DsvmError::Parse {
                        line: lineno,
                        message: format!("index {idx} exceeds dimension {d}"),
                    });
                }
            }
            last = idx;
            row.push((idx - 1, val));
        }
        max_index = max_index.max(last);
        labels.push(label);
        entries.push(row);
    }
    let m = dim.unwrap_or(max_index);
    let mut rows = Array2::zeros((entries.len(), m));
    for (i, row) in entries.iter().enumerate() {
        for &(j, v) in row {
            rows[[i, j]] = v;
        }
    }
    Ok(RawTable::complete(rows, labels))
}

pub fn load_sparse_text(path: &Path, dim: Option<usize>) -> Result<RawTable> {
    parse_sparse_text(BufReader::new(File::open(path)?), dim)
}

/// Writes nonzero entries only; values use shortest round-trip formatting.
pub fn write_sparse_text<W: Write>(mut out: W, table: &RawTable) -> Result<()> {
    for (row, label) in table.rows.rows().into_iter().zip(&table.labels) {
        write!(out, "{label}")?;
        for (j, v) in row.iter().enumerate() {
            if *v != 0.0 {
                write!(out, " {}:{:?}", j + 1, v)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn parse(s: &str, dim: Option<usize>) -> Result<RawTable> {
        parse_sparse_text(s.as_bytes(), dim)
    }

    #[test]
    fn basic_line() {
        let t = parse("+1 1:0.5 3:2\n", None).unwrap();
        assert_eq!(t.rows, array![[0.5, 0.0, 2.0]]);
        assert_eq!(t.labels, vec![1]);
    }

    #[test]
    fn empty_feature_list() {
        let t = parse("-1\n+1 2:1 # comment\n", None).unwrap();
        assert_eq!(t.rows, array![[0.0, 0.0], [0.0, 1.0]]);
        assert_eq!(t.labels, vec![-1, 1]);
    }

    #[test]
    fn comments_and_blank_lines() {
        let t = parse("# header\n\n3 1:1e-3\n", None).unwrap();
        assert_eq!(t.labels, vec![3]);
        assert_eq!(t.rows[[0, 0]], 1e-3);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse("1 1:1\n1 2:1 2:3\n", None) {
            Err(DsvmError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse("1 1:1\n\n1 x\n", None) {
            Err(DsvmError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse("1 0:1\n", None).is_err());
        assert!(parse("a 1:1\n", None).is_err());
        assert!(parse("1 3:1\n", Some(2)).is_err());
        assert!(parse("1 2:1 1:1\n", None).is_err());
    }

    proptest! {
        #[test]
        fn write_read_round_trip(
            rows in proptest::collection::vec(proptest::collection::vec(prop_oneof![Just(0.0), -1e6f64..1e6], 5), 1..12),
            labels in proptest::collection::vec(-3i64..4, 12),
        ) {
            let n = rows.len();
            let flat: Vec<f64> = rows.concat();
            let table = RawTable::complete(Array2::from_shape_vec((n, 5), flat).unwrap(), labels[..n].to_vec());
            let mut buf = Vec::new();
            write_sparse_text(&mut buf, &table).unwrap();
            let back = parse_sparse_text(&buf[..], Some(5)).unwrap();
            prop_assert_eq!(back.labels, table.labels);
            for (a, b) in back.rows.iter().zip(table.rows.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}

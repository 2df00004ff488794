//! CSV ingestion for point clouds and distance matrices, weight output, and
//! input digests.
//!
//! A first row containing any token that does not parse as a number is
//! treated as a header and skipped.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{MagError, Result};
use crate::exact::Weighting;
use crate::metric::{DuplicatePolicy, Metric, MetricSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// One point per row.
    #[default]
    Points,
    /// A square matrix of pairwise distances.
    Distances,
}

/// Numeric rows of a CSV file, header skipped.
pub fn read_rows<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if r == 0 => continue,
            Err(_) => {
                let col = record.iter().position(|t| t.parse::<f64>().is_err()).unwrap();
                return Err(MagError::Parse(format!(
                    "row {} column {}: '{}' is not a number",
                    r + 1,
                    col + 1,
                    &record[col]
                )));
            }
        }
    }
    if rows.is_empty() {
        return Err(MagError::EmptyInput);
    }
    Ok(rows)
}

pub fn read_space<R: Read>(input: R, kind: InputKind, metric: Metric, policy: DuplicatePolicy) -> Result<MetricSpace> {
    let rows = read_rows(input)?;
    match kind {
        InputKind::Points => MetricSpace::from_points_with(&rows, metric, policy),
        InputKind::Distances => MetricSpace::from_distance_matrix_with(&rows, policy),
    }
}

pub fn read_space_file(path: &Path, kind: InputKind, metric: Metric, policy: DuplicatePolicy) -> Result<MetricSpace> {
    read_space(BufReader::new(File::open(path)?), kind, metric, policy)
}

/// All values of a CSV file, row by row, as one flat vector.
pub fn read_values<R: Read>(input: R) -> Result<Vec<f64>> {
    Ok(read_rows(input)?.into_iter().flatten().collect())
}

/// Writes `point_id,weight` rows.
pub fn write_weights_csv<W: Write>(weighting: &Weighting, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["point_id", "weight"])?;
    for (i, x) in weighting.w.iter().enumerate() {
        w.write_record([i.to_string(), format!("{x:e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Lowercase hex SHA-256 of a byte stream.
pub fn digest<R: Read>(mut input: R) -> Result<String> {
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let k = input.read(&mut buf)?;
        if k == 0 {
            break;
        }
        hasher.update(&buf[..k]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

pub fn file_digest(path: &Path) -> Result<String> {
    digest(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_detection() {
        let with = read_rows("x,y\n0,1\n2,3\n".as_bytes()).unwrap();
        let without = read_rows("0,1\n2,3\n".as_bytes()).unwrap();
        assert_eq!(with, without);
        assert_eq!(with, vec![vec![0.0, 1.0], vec![2.0, 3.0]]);
        // A single non-numeric token in the first row is enough.
        assert_eq!(read_rows("1,b\n2,3\n".as_bytes()).unwrap(), vec![vec![2.0, 3.0]]);
    }

    #[test]
    fn bad_cells_and_empty_input() {
        assert!(matches!(read_rows("0,1\n2,x\n".as_bytes()), Err(MagError::Parse(_))));
        assert_eq!(read_rows("a,b\n".as_bytes()).unwrap_err(), MagError::EmptyInput);
        assert_eq!(read_rows("".as_bytes()).unwrap_err(), MagError::EmptyInput);
    }

    #[test]
    fn ragged_rows_are_rejected_by_the_space() {
        let err = read_space("0,1\n2\n".as_bytes(), InputKind::Points, Metric::Euclidean, DuplicatePolicy::Reject)
            .unwrap_err();
        assert!(matches!(err, MagError::DimensionMismatch { .. }));
    }

    #[test]
    fn distance_matrix_input() {
        let s = read_space(
            "a,b\n0,0.6931471805599453\n0.6931471805599453,0\n".as_bytes(),
            InputKind::Distances,
            Metric::Euclidean,
            DuplicatePolicy::Reject,
        )
        .unwrap();
        assert_eq!(s.len(), 2);
        assert!((s.dist(0, 1) - std::f64::consts::LN_2).abs() < 1e-16);
    }

    #[test]
    fn sha256_of_known_input() {
        assert_eq!(
            digest("abc".as_bytes()).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn weights_round_trip() {
        let w = Weighting {
            w: vec![0.5, 0.25],
            residual: vec![0.0, 0.0],
            scale: 1.0,
        };
        let mut buf = Vec::new();
        write_weights_csv(&w, &mut buf).unwrap();
        let back = read_rows(buf.as_slice()).unwrap();
        assert_eq!(back, vec![vec![0.0, 0.5], vec![1.0, 0.25]]);
    }
}

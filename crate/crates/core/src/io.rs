//! File formats.
//!
//! Matrices and vectors are CSV with a header row (`x1,…,xp` and `y`). Truth
//! and partition files are JSON with a `schema_version` field; all indices in
//! files are 1-based, in memory they are 0-based.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GroundTruth, GroupPartition};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

fn parse_rows(path: &Path, expect_cols: Option<usize>) -> Result<(Vec<Vec<f64>>, usize)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Parse {
                path: path.into(),
                row: 0,
                column: 0,
                message: format!("{other:?}"),
            },
        })?;
    let width = rdr
        .headers()
        .map_err(|e| Error::Parse {
            path: path.into(),
            row: 0,
            column: 0,
            message: e.to_string(),
        })?
        .len();
    if let Some(c) = expect_cols {
        if width != c {
            return Err(Error::Parse {
                path: path.into(),
                row: 0,
                column: width,
                message: format!("expected {c} column(s) in the header, found {width}"),
            });
        }
    }
    let mut rows = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| Error::Parse {
            path: path.into(),
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if rec.len() != width {
            return Err(Error::Parse {
                path: path.into(),
                row,
                column: rec.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        let mut vals = Vec::with_capacity(width);
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                path: path.into(),
                row,
                column: c + 1,
                message: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.into(),
                    row,
                    column: c + 1,
                    message: format!("non-finite value {field:?}"),
                });
            }
            vals.push(v);
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.into(),
            row: 1,
            column: 0,
            message: "no data rows".into(),
        });
    }
    Ok((rows, width))
}

/// Reads a design matrix, one sample per row; `row` in errors counts data rows from 1.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let (rows, width) = parse_rows(path, None)?;
    Ok(DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]))
}

pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let (rows, _) = parse_rows(path, Some(1))?;
    Ok(DVector::from_iterator(rows.len(), rows.iter().map(|r| r[0])))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn write_matrix_csv(path: &Path, x: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record((1..=x.ncols()).map(|j| format!("x{j}")))?;
    for row in x.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_vector_csv(path: &Path, header: &str, v: &DVector<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([header])?;
    for x in v.iter() {
        w.write_record([x.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_dataset(x_path: &Path, y_path: &Path) -> Result<Dataset> {
    let x = read_matrix_csv(x_path)?;
    let y = read_vector_csv(y_path)?;
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "response length",
            expected: x.nrows(),
            got: y.len(),
        });
    }
    Dataset::new(x, y)
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthFile {
    pub schema_version: u32,
    pub p: usize,
    pub beta_star: Vec<f64>,
    /// 1-based.
    pub support: Vec<usize>,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Vec<f64>>,
}

impl From<&GroundTruth> for TruthFile {
    fn from(gt: &GroundTruth) -> Self {
        TruthFile {
            schema_version: SCHEMA_VERSION,
            p: gt.beta_star.len(),
            beta_star: gt.beta_star.iter().copied().collect(),
            support: gt.support.iter().map(|j| j + 1).collect(),
            sigma: gt.sigma,
            epsilon: gt.epsilon.as_ref().map(|e| e.iter().copied().collect()),
        }
    }
}

impl TryFrom<TruthFile> for GroundTruth {
    type Error = Error;

    fn try_from(f: TruthFile) -> Result<Self> {
        if f.beta_star.len() != f.p {
            return Err(Error::Config(format!(
                "truth file: beta_star has {} entries, p = {}",
                f.beta_star.len(),
                f.p
            )));
        }
        let gt = GroundTruth::new(
            DVector::from_vec(f.beta_star),
            f.epsilon.map(DVector::from_vec),
            f.sigma,
        );
        let support: Vec<usize> = gt.support.iter().map(|j| j + 1).collect();
        if support != f.support {
            return Err(Error::Config(
                "truth file: support does not match the nonzero entries of beta_star".into(),
            ));
        }
        Ok(gt)
    }
}

pub fn write_truth(path: &Path, gt: &GroundTruth) -> Result<()> {
    write_json(path, &TruthFile::from(gt))
}

pub fn read_truth(path: &Path) -> Result<GroundTruth> {
    let f: TruthFile = read_json(path)?;
    check_version(f.schema_version, path)?;
    GroundTruth::try_from(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionFile {
    pub schema_version: u32,
    pub p: usize,
    /// 1-based indices.
    pub groups: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
}

impl From<&GroupPartition> for PartitionFile {
    fn from(g: &GroupPartition) -> Self {
        PartitionFile {
            schema_version: SCHEMA_VERSION,
            p: g.p(),
            groups: g.groups().iter().map(|idx| idx.iter().map(|j| j + 1).collect()).collect(),
            weights: g.weights().to_vec(),
        }
    }
}

impl TryFrom<PartitionFile> for GroupPartition {
    type Error = Error;

    fn try_from(f: PartitionFile) -> Result<Self> {
        let mut groups = Vec::with_capacity(f.groups.len());
        for idx in f.groups {
            if idx.contains(&0) {
                return Err(Error::Config("partition file: indices are 1-based, found 0".into()));
            }
            groups.push(idx.into_iter().map(|j| j - 1).collect());
        }
        GroupPartition::new(groups, f.weights, f.p)
    }
}

pub fn write_partition(path: &Path, g: &GroupPartition) -> Result<()> {
    write_json(path, &PartitionFile::from(g))
}

pub fn read_partition(path: &Path) -> Result<GroupPartition> {
    let f: PartitionFile = read_json(path)?;
    check_version(f.schema_version, path)?;
    GroupPartition::try_from(f)
}

fn check_version(v: u32, path: &Path) -> Result<()> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{}: unsupported schema_version {v}",
            path.display()
        )))
    }
}

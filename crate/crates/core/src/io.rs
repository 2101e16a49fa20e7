//! CSV dataset I/O.
//!
//! Two schemas: the index model reads `y,x1,...,xd` (d inferred from the
//! header); the activity-score model reads
//! `W,Y,vig,mod,light,mvpa,weights,sit_tv,sit_other,sleep,z1,...,zk`
//! (k inferred). Rows with missing or non-numeric cells are rejected with
//! their line numbers.

use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::ACTIVITY_COLUMNS;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetSchema {
    /// `y,x1..xd`
    Index,
    /// `W,Y,<8 activity columns>,z1..zk`
    Score,
}

impl DatasetSchema {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "index" => Ok(DatasetSchema::Index),
            "score" => Ok(DatasetSchema::Score),
            other => Err(Error::InvalidArgument(format!(
                "unknown model/schema `{other}` (index, score)"
            ))),
        }
    }
}

fn parse_cell(field: &str, line: usize, column: usize) -> Result<f64> {
    let trimmed = field.trim();
    if trimmed.is_empty() {
        return Err(Error::ParseError {
            line,
            column,
            message: "missing value".into(),
        });
    }
    trimmed.parse::<f64>().map_err(|_| Error::ParseError {
        line,
        column,
        message: format!("`{trimmed}` is not a number"),
    })
}

fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::io(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::io(path, e))?
        .iter()
        .map(|h| h.to_string())
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(Error::SchemaMismatch("empty file".into()));
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2; // header is line 1
        let record = record.map_err(|e| Error::io(path, e))?;
        if record.len() != header.len() {
            return Err(Error::ParseError {
                line,
                column: record.len(),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let mut row = Vec::with_capacity(header.len());
        for (ci, field) in record.iter().enumerate() {
            row.push(parse_cell(field, line, ci + 1)?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::SchemaMismatch("no data rows".into()));
    }
    Ok((header, rows))
}

/// Load and validate a dataset against the declared schema.
pub fn load_dataset(path: &Path, schema: DatasetSchema) -> Result<Dataset> {
    let (header, rows) = read_rows(path)?;
    match schema {
        DatasetSchema::Index => {
            if header[0] != "y" {
                return Err(Error::SchemaMismatch(format!(
                    "index schema expects first column `y`, found `{}`",
                    header[0]
                )));
            }
            let d = header.len() - 1;
            if d == 0 {
                return Err(Error::SchemaMismatch(
                    "index schema needs at least one x column".into(),
                ));
            }
            for (j, h) in header[1..].iter().enumerate() {
                let want = format!("x{}", j + 1);
                if *h != want {
                    return Err(Error::SchemaMismatch(format!(
                        "index schema expects column {} to be `{want}`, found `{h}`",
                        j + 2
                    )));
                }
            }
            let n = rows.len();
            let mut y = Vec::with_capacity(n);
            let mut x = Vec::with_capacity(n * d);
            for row in rows {
                y.push(row[0]);
                x.extend_from_slice(&row[1..]);
            }
            Dataset::from_y_x(y, x, d)
        }
        DatasetSchema::Score => {
            let mut want: Vec<String> = vec!["W".into(), "Y".into()];
            want.extend(ACTIVITY_COLUMNS.iter().map(|c| c.to_string()));
            if header.len() < want.len() {
                return Err(Error::SchemaMismatch(format!(
                    "score schema needs at least {} columns, found {}",
                    want.len(),
                    header.len()
                )));
            }
            for (i, w) in want.iter().enumerate() {
                if header[i] != *w {
                    return Err(Error::SchemaMismatch(format!(
                        "score schema expects column {} to be `{w}`, found `{}`",
                        i + 1,
                        header[i]
                    )));
                }
            }
            let k = header.len() - want.len();
            for (j, h) in header[want.len()..].iter().enumerate() {
                let zname = format!("z{}", j + 1);
                if *h != zname {
                    return Err(Error::SchemaMismatch(format!(
                        "score schema expects column {} to be `{zname}`, found `{h}`",
                        want.len() + j + 1
                    )));
                }
            }
            let n = rows.len();
            let mut w = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            let mut x = Vec::with_capacity(n * 8);
            let mut z = Vec::with_capacity(n * k);
            for row in rows {
                w.push(row[0]);
                y.push(row[1]);
                x.extend_from_slice(&row[2..10]);
                z.extend_from_slice(&row[10..]);
            }
            Dataset::from_parts(
                Some(w),
                Some(y),
                Some((x, 8)),
                if k > 0 { Some((z, k)) } else { None },
            )
        }
    }
}

/// Write a dataset in the schema it supports (score when `W` and eight
/// activity columns are present, index otherwise).
pub fn write_dataset(data: &Dataset, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::io(path, e))?;
    let score_shape = data.w().is_some() && data.dim_x() == 8;
    if score_shape {
        let mut header: Vec<String> = vec!["W".into(), "Y".into()];
        header.extend(ACTIVITY_COLUMNS.iter().map(|c| c.to_string()));
        for j in 0..data.dim_z() {
            header.push(format!("z{}", j + 1));
        }
        wtr.write_record(&header).map_err(|e| Error::io(path, e))?;
        for i in 0..data.n() {
            let mut row: Vec<String> = Vec::with_capacity(header.len());
            row.push(data.w().unwrap()[i].to_string());
            row.push(data.y().map_or(0.0, |y| y[i]).to_string());
            for v in data.x_row(i).unwrap() {
                row.push(v.to_string());
            }
            if let Some(z) = data.z_row(i) {
                for v in z {
                    row.push(v.to_string());
                }
            }
            wtr.write_record(&row).map_err(|e| Error::io(path, e))?;
        }
    } else {
        let y = data
            .y()
            .ok_or_else(|| Error::SchemaMismatch("index schema needs Y".into()))?;
        let d = data.dim_x();
        let mut header = vec!["y".to_string()];
        for j in 0..d {
            header.push(format!("x{}", j + 1));
        }
        wtr.write_record(&header).map_err(|e| Error::io(path, e))?;
        for i in 0..data.n() {
            let mut row = vec![y[i].to_string()];
            for v in data.x_row(i).unwrap() {
                row.push(v.to_string());
            }
            wtr.write_record(&row).map_err(|e| Error::io(path, e))?;
        }
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

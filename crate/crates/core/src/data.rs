//! Observation records: outcomes `W` and `Y` plus covariate blocks `X` and
//! `Z`, any subset of which a given model may use.

use crate::error::{Error, Result};

/// Column-block dataset. All blocks that are present have length `n`;
/// covariate blocks are row-major.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Dataset {
    n: usize,
    w: Option<Vec<f64>>,
    y: Option<Vec<f64>>,
    x: Option<Block>,
    z: Option<Block>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
struct Block {
    dim: usize,
    values: Vec<f64>, // row-major n x dim
}

/// Borrowed view of one record.
#[derive(Clone, Copy, Debug)]
pub struct RecordView<'a> {
    pub w: Option<f64>,
    pub y: Option<f64>,
    pub x: Option<&'a [f64]>,
    pub z: Option<&'a [f64]>,
}

impl Dataset {
    pub fn from_parts(
        w: Option<Vec<f64>>,
        y: Option<Vec<f64>>,
        x: Option<(Vec<f64>, usize)>,
        z: Option<(Vec<f64>, usize)>,
    ) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut check = |len: usize, what: &str| -> Result<()> {
            match n {
                None => {
                    n = Some(len);
                    Ok(())
                }
                Some(m) if m == len => Ok(()),
                Some(m) => Err(Error::SchemaMismatch(format!(
                    "{what} has {len} records but earlier blocks have {m}"
                ))),
            }
        };
        if let Some(w) = &w {
            check(w.len(), "W")?;
        }
        if let Some(y) = &y {
            check(y.len(), "Y")?;
        }
        let x = match x {
            Some((values, dim)) => {
                if dim == 0 || values.len() % dim != 0 {
                    return Err(Error::SchemaMismatch("X block shape".into()));
                }
                check(values.len() / dim, "X")?;
                Some(Block { dim, values })
            }
            None => None,
        };
        let z = match z {
            Some((values, dim)) => {
                if dim == 0 || values.len() % dim != 0 {
                    return Err(Error::SchemaMismatch("Z block shape".into()));
                }
                check(values.len() / dim, "Z")?;
                Some(Block { dim, values })
            }
            None => None,
        };
        let n = n.ok_or_else(|| Error::SchemaMismatch("empty dataset".into()))?;
        if n < 2 {
            return Err(Error::SchemaMismatch(format!("need n >= 2 records, got {n}")));
        }
        if let Some(bad) = [
            w.as_deref().unwrap_or(&[]),
            y.as_deref().unwrap_or(&[]),
            x.as_ref().map(|b| b.values.as_slice()).unwrap_or(&[]),
            z.as_ref().map(|b| b.values.as_slice()).unwrap_or(&[]),
        ]
        .iter()
        .find(|vals| vals.iter().any(|v| !v.is_finite()))
        {
            let _ = bad;
            return Err(Error::SchemaMismatch("non-finite value in dataset".into()));
        }
        Ok(Self { n, w, y, x, z })
    }

    /// Response plus covariate matrix, the shape used by the regression models.
    pub fn from_y_x(y: Vec<f64>, x: Vec<f64>, dim_x: usize) -> Result<Self> {
        Self::from_parts(None, Some(y), Some((x, dim_x)), None)
    }

    /// Single outcome `W` only.
    pub fn from_w(w: Vec<f64>) -> Result<Self> {
        Self::from_parts(Some(w), None, None, None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn w(&self) -> Option<&[f64]> {
        self.w.as_deref()
    }

    pub fn y(&self) -> Option<&[f64]> {
        self.y.as_deref()
    }

    pub fn dim_x(&self) -> usize {
        self.x.as_ref().map_or(0, |b| b.dim)
    }

    pub fn dim_z(&self) -> usize {
        self.z.as_ref().map_or(0, |b| b.dim)
    }

    /// Row-major X block, if present.
    pub fn x(&self) -> Option<&[f64]> {
        self.x.as_ref().map(|b| b.values.as_slice())
    }

    pub fn z(&self) -> Option<&[f64]> {
        self.z.as_ref().map(|b| b.values.as_slice())
    }

    pub fn x_row(&self, i: usize) -> Option<&[f64]> {
        self.x.as_ref().map(|b| &b.values[i * b.dim..(i + 1) * b.dim])
    }

    pub fn z_row(&self, i: usize) -> Option<&[f64]> {
        self.z.as_ref().map(|b| &b.values[i * b.dim..(i + 1) * b.dim])
    }

    pub fn record(&self, i: usize) -> RecordView<'_> {
        assert!(i < self.n);
        RecordView {
            w: self.w.as_ref().map(|v| v[i]),
            y: self.y.as_ref().map(|v| v[i]),
            x: self.x_row(i),
            z: self.z_row(i),
        }
    }

    /// Same covariates with a replacement response, as used by the null
    /// simulation (`Y*` paired with the observed design).
    pub fn with_y(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.n {
            return Err(Error::SchemaMismatch(format!(
                "replacement Y has {} records, dataset has {}",
                y.len(),
                self.n
            )));
        }
        let mut out = self.clone();
        out.y = Some(y);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_and_reads_records() {
        let d = Dataset::from_parts(
            Some(vec![1.0, 0.0, 1.0]),
            Some(vec![5.0, 6.0, 7.0]),
            Some((vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 2)),
            None,
        )
        .unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.dim_x(), 2);
        let r = d.record(1);
        assert_eq!(r.w, Some(0.0));
        assert_eq!(r.y, Some(6.0));
        assert_eq!(r.x, Some(&[3.0, 4.0][..]));
        assert!(r.z.is_none());
    }

    #[test]
    fn rejects_ragged_blocks() {
        let err = Dataset::from_parts(Some(vec![1.0, 2.0]), Some(vec![1.0]), None, None);
        assert!(matches!(err, Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn rejects_tiny_and_nonfinite() {
        assert!(Dataset::from_w(vec![1.0]).is_err());
        assert!(Dataset::from_w(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn with_y_swaps_response() {
        let d = Dataset::from_y_x(vec![1.0, 2.0], vec![1.0, 2.0], 1).unwrap();
        let d2 = d.with_y(vec![9.0, 10.0]).unwrap();
        assert_eq!(d2.y(), Some(&[9.0, 10.0][..]));
        assert_eq!(d2.x(), d.x());
        assert!(d.with_y(vec![1.0]).is_err());
    }
}

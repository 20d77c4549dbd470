//! CSV ingestion and the componentwise rank transform onto the copula scale.

use crate::error::{Error, Result};
use crate::model::CopulaSample;
use std::fs;
use std::path::Path;

/// A numeric data matrix with named columns, row major, no missing entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    column_names: Vec<String>,
    n: usize,
    values: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset, enforcing at least 2 rows and 2 columns and finite
    /// entries throughout.
    pub fn new(column_names: Vec<String>, n: usize, values: Vec<f64>) -> Result<Self> {
        let d = column_names.len();
        if d < 2 {
            return Err(Error::Data(format!("need at least 2 columns, got {d}")));
        }
        if n < 2 {
            return Err(Error::Data(format!("need at least 2 data rows, got {n}")));
        }
        if values.len() != n * d {
            return Err(Error::Data(format!(
                "value buffer holds {} entries, expected {n} x {d}",
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value at row {}, column {}",
                idx / d + 1,
                idx % d + 1
            )));
        }
        Ok(Self {
            column_names,
            n,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn get(&self, t: usize, i: usize) -> f64 {
        self.values[t * self.dim() + i]
    }

    /// Copies column `i` out of the row-major storage.
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|t| self.get(t, i)).collect()
    }
}

/// Reads a comma-separated file whose first row is a header and whose body
/// is fully numeric. Parse failures name the offending data row and column,
/// both one-based; blank lines are skipped.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_csv(&text)
}

fn parse_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().filter(|line| !line.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Data("empty file, expected a header row".into()))?;
    let column_names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let d = column_names.len();
    if d < 2 {
        return Err(Error::Data(format!(
            "need at least 2 columns, header has {d}"
        )));
    }
    let mut values = Vec::new();
    let mut n = 0;
    for (idx, line) in lines.enumerate() {
        let row = idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != d {
            return Err(Error::Parse {
                row,
                column: cells.len().min(d),
                message: format!("expected {d} cells, found {}", cells.len()),
            });
        }
        for (i, cell) in cells.iter().enumerate() {
            let cell = cell.trim();
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: i + 1,
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: i + 1,
                    message: format!("non-finite value {value}"),
                });
            }
            values.push(value);
        }
        n += 1;
    }
    Dataset::new(column_names, n, values)
}

/// Maps each column to pseudo-uniform scores `rank / (n + 1)`, averaging
/// ranks across ties, so every output lies strictly inside `(0, 1)`. A
/// constant column has no well-defined copula margin and is rejected.
pub fn rank_transform(data: &Dataset) -> Result<CopulaSample> {
    let n = data.rows();
    let d = data.dim();
    let mut out = vec![0.0; n * d];
    for i in 0..d {
        let column = data.column(i);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| column[a].total_cmp(&column[b]));
        if column[order[0]] == column[order[n - 1]] {
            return Err(Error::Data(format!(
                "column {} ({}) is constant, so its copula margin is undefined",
                i + 1,
                data.column_names()[i]
            )));
        }
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && column[order[end]] == column[order[start]] {
                end += 1;
            }
            // ranks start+1 ..= end share their arithmetic mean
            let u = (start + 1 + end) as f64 / 2.0 / (n + 1) as f64;
            for &t in &order[start..end] {
                out[t * d + i] = u;
            }
            start = end;
        }
    }
    CopulaSample::new(n, d, out)
}

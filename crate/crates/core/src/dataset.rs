//! The raw testing input: m samples (rows) by n observations (columns),
//! with CSV ingestion.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

/// An m x n matrix of real observations, row-major. Row i is the sample for
/// hypothesis i.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    m: usize,
    n: usize,
    values: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from rows; all rows must be nonempty and equally long.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::config("dataset must have at least one row"));
        }
        let n = rows[0].len();
        if n == 0 {
            return Err(Error::config("dataset rows must be nonempty"));
        }
        let mut values = Vec::with_capacity(rows.len() * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::config(format!(
                    "row {} has {} columns, expected {}",
                    i + 1,
                    row.len(),
                    n
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(Dataset {
            m: rows.len(),
            n,
            values,
        })
    }

    pub(crate) fn from_flat(m: usize, n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), m * n);
        Dataset { m, n, values }
    }

    /// Reads a CSV of decimal floats: m rows by n columns, comma-separated,
    /// no header unless `skip_header`. Any non-numeric or non-finite cell is
    /// a hard error naming its (1-based) row and column.
    pub fn from_csv_reader<R: BufRead>(reader: R, skip_header: bool) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut n_cols = 0usize;
        let mut data_row = 0usize;
        for (line_idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line_idx == 0 && skip_header {
                continue;
            }
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() {
                continue; // tolerate blank lines (e.g. trailing newline)
            }
            data_row += 1;
            let mut row = Vec::new();
            for (col_idx, cell) in trimmed.split(',').enumerate() {
                let cell = cell.trim();
                let value: f64 = cell.parse().map_err(|_| Error::Data {
                    row: data_row,
                    column: col_idx + 1,
                    message: format!("cannot parse {cell:?} as a decimal float"),
                })?;
                if !value.is_finite() {
                    return Err(Error::Data {
                        row: data_row,
                        column: col_idx + 1,
                        message: format!("value {value} is not finite"),
                    });
                }
                row.push(value);
            }
            if data_row == 1 {
                n_cols = row.len();
            } else if row.len() != n_cols {
                return Err(Error::Data {
                    row: data_row,
                    column: row.len().min(n_cols) + 1,
                    message: format!("expected {} columns, found {}", n_cols, row.len()),
                });
            }
            rows.push(row);
        }
        Dataset::from_rows(&rows)
    }

    pub fn from_csv_path<P: AsRef<Path>>(path: P, skip_header: bool) -> Result<Self> {
        let file = File::open(path)?;
        Dataset::from_csv_reader(BufReader::new(file), skip_header)
    }

    /// Number of hypotheses m (rows).
    pub fn n_hypotheses(&self) -> usize {
        self.m
    }

    /// Observations per hypothesis n (columns).
    pub fn n_obs(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n)
    }

    /// Returns a dataset whose rows are permuted: new row i = old row perm[i].
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.m {
            return Err(Error::config("permutation length must equal row count"));
        }
        let mut values = Vec::with_capacity(self.values.len());
        for &src in perm {
            values.extend_from_slice(self.row(src));
        }
        Ok(Dataset {
            m: self.m,
            n: self.n,
            values,
        })
    }
}

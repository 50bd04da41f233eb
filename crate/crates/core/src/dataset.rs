use crate::circular::wrap;
use crate::error::{Error, Result};

/// An `n × d` table of angles in radians with a missingness mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<String>,
    /// Row-major angles; masked cells hold `0.0` and are never read.
    values: Vec<Vec<f64>>,
    missing: Vec<Vec<bool>>,
}

impl Dataset {
    /// Builds a dataset from rows of optional angles; `None` marks a missing
    /// cell. Observed angles are wrapped into `[-π, π)`.
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let d = columns.len();
        if d == 0 {
            return Err(Error::domain("dataset needs at least one column"));
        }
        let mut values = Vec::with_capacity(rows.len());
        let mut missing = Vec::with_capacity(rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::domain(format!("row {i} has {} cells, expected {d}", row.len())));
            }
            let mut v = Vec::with_capacity(d);
            let mut m = Vec::with_capacity(d);
            for cell in row {
                match cell {
                    Some(x) => {
                        v.push(wrap(x)?);
                        m.push(false);
                    }
                    None => {
                        v.push(0.0);
                        m.push(true);
                    }
                }
            }
            values.push(v);
            missing.push(m);
        }
        Ok(Dataset {
            columns,
            values,
            missing,
        })
    }

    /// Fully observed dataset from a row-major matrix of angles.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        Self::new(
            default_columns(d),
            rows.iter().map(|r| r.iter().map(|&x| Some(x)).collect()).collect(),
        )
    }

    /// A dataset with no observations, for prior-only runs.
    pub fn empty(d: usize) -> Result<Self> {
        Self::new(default_columns(d), Vec::new())
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if self.missing[i][j] {
            None
        } else {
            Some(self.values[i][j])
        }
    }

    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.missing[i][j]
    }

    pub fn row(&self, i: usize) -> Vec<Option<f64>> {
        (0..self.dim()).map(|j| self.get(i, j)).collect()
    }

    /// Masked cells in row-major order.
    pub fn missing_cells(&self) -> Vec<(usize, usize)> {
        let mut cells = Vec::new();
        for (i, row) in self.missing.iter().enumerate() {
            for (j, &m) in row.iter().enumerate() {
                if m {
                    cells.push((i, j));
                }
            }
        }
        cells
    }

    /// Observed values of column `j`.
    pub fn observed_column(&self, j: usize) -> Vec<f64> {
        (0..self.n()).filter_map(|i| self.get(i, j)).collect()
    }

    /// Index of the first column with no observed value, if any.
    pub fn first_empty_column(&self) -> Option<usize> {
        (0..self.dim()).find(|&j| (0..self.n()).all(|i| self.missing[i][j]))
    }

    /// Sub-dataset made of the given rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.clone(),
            values: rows.iter().map(|&i| self.values[i].clone()).collect(),
            missing: rows.iter().map(|&i| self.missing[i].clone()).collect(),
        }
    }
}

fn default_columns(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("theta{j}")).collect()
}

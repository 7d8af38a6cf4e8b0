//! Design matrices and validated datasets.
//!
//! The design is stored column-major because coordinate descent walks the
//! columns in its inner loop.

use crate::error::{mismatch, Result, SolverError};

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Matrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    /// Wraps a column-major buffer of length `nrows * ncols`.
    pub fn from_col_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(mismatch(format!(
                "buffer of length {} cannot hold a {}x{} matrix",
                data.len(),
                nrows,
                ncols
            )));
        }
        Ok(Matrix { nrows, ncols, data })
    }

    /// Builds a matrix from row vectors, which must all have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Matrix::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != ncols {
                return Err(mismatch(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    ncols
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                m.data[j * nrows + i] = v;
            }
        }
        Ok(m)
    }

    pub fn from_columns<C: AsRef<[f64]>>(cols: &[C]) -> Result<Self> {
        let ncols = cols.len();
        let nrows = cols.first().map_or(0, |c| c.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for (j, col) in cols.iter().enumerate() {
            let col = col.as_ref();
            if col.len() != nrows {
                return Err(mismatch(format!(
                    "column {} has {} entries, expected {}",
                    j,
                    col.len(),
                    nrows
                )));
            }
            data.extend_from_slice(col);
        }
        Ok(Matrix { nrows, ncols, data })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nrows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nrows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        let n = self.nrows;
        &mut self.data[j * n..(j + 1) * n]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.ncols).map(|j| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `X * beta`.
    pub fn mul_vec(&self, beta: &[f64]) -> Vec<f64> {
        debug_assert_eq!(beta.len(), self.ncols);
        let mut out = vec![0.0; self.nrows];
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (o, &x) in out.iter_mut().zip(self.col(j)) {
                    *o += x * b;
                }
            }
        }
        out
    }

    /// `X^T v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.nrows);
        (0..self.ncols).map(|j| dot(self.col(j), v)).collect()
    }

    /// Copies the listed rows, in order, into a new matrix.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.ncols);
        for j in 0..self.ncols {
            let c = self.col(j);
            data.extend(rows.iter().map(|&i| c[i]));
        }
        Matrix {
            nrows: rows.len(),
            ncols: self.ncols,
            data,
        }
    }

    /// Copies the listed columns, in order, into a new matrix.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(cols.len() * self.nrows);
        for &j in cols {
            data.extend_from_slice(self.col(j));
        }
        Matrix {
            nrows: self.nrows,
            ncols: cols.len(),
            data,
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A validated regression problem: design `x` (n x p) and response `y`.
///
/// Immutable once built, so it can be shared across concurrent fits.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vec<f64>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Validation gate: checks shape and finiteness.
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(mismatch(format!(
                "design must be at least 1x1, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        if y.len() != x.nrows() {
            return Err(mismatch(format!(
                "response has length {} but design has {} rows",
                y.len(),
                x.nrows()
            )));
        }
        if let Some(pos) = x.as_slice().iter().position(|v| !v.is_finite()) {
            let (i, j) = (pos % x.nrows(), pos / x.nrows());
            return Err(SolverError::NonfiniteInput(format!(
                "design entry ({}, {}) is not finite",
                i, j
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::NonfiniteInput(format!(
                "response entry {} is not finite",
                i
            )));
        }
        Ok(Dataset {
            x,
            y,
            feature_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(mismatch(format!(
                "{} feature names for {} columns",
                names.len(),
                self.p()
            )));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Name of column `j`, falling back to `x{j+1}`.
    pub fn feature_name(&self, j: usize) -> String {
        match &self.feature_names {
            Some(names) => names[j].clone(),
            None => format!("x{}", j + 1),
        }
    }

    /// Rows `idx` as a new dataset (feature names carried over).
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Residuals `y - intercept - X beta`.
    pub fn residuals(&self, beta: &[f64], intercept: f64) -> Result<Vec<f64>> {
        self.check_beta(beta)?;
        let fitted = self.x.mul_vec(beta);
        Ok(self
            .y
            .iter()
            .zip(&fitted)
            .map(|(y, f)| y - intercept - f)
            .collect())
    }

    pub(crate) fn check_beta(&self, beta: &[f64]) -> Result<()> {
        if beta.len() != self.p() {
            return Err(mismatch(format!(
                "coefficient vector has length {} but the design has {} columns",
                beta.len(),
                self.p()
            )));
        }
        Ok(())
    }
}

/// Centering and scaling applied by [`standardize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub x_mean: Vec<f64>,
    pub x_scale: Vec<f64>,
    pub y_mean: f64,
}

impl Standardization {
    /// Maps coefficients fitted on the standardized scale back to the original
    /// scale, so that `x . beta + intercept` gives the same predictions.
    pub fn to_original(&self, beta: &[f64], intercept: f64) -> (Vec<f64>, f64) {
        let b: Vec<f64> = beta
            .iter()
            .zip(&self.x_scale)
            .map(|(b, s)| b / s)
            .collect();
        let shift: f64 = b.iter().zip(&self.x_mean).map(|(b, m)| b * m).sum();
        (b, self.y_mean + intercept - shift)
    }

    /// Inverse of [`Standardization::to_original`].
    pub fn to_standardized(&self, beta: &[f64], intercept: f64) -> (Vec<f64>, f64) {
        let shift: f64 = beta.iter().zip(&self.x_mean).map(|(b, m)| b * m).sum();
        let b = beta
            .iter()
            .zip(&self.x_scale)
            .map(|(b, s)| b * s)
            .collect();
        (b, intercept + shift - self.y_mean)
    }
}

/// Centers and scales every column to mean 0 and sample sd 1, and centers `y`.
pub fn standardize(d: &Dataset) -> Result<(Dataset, Standardization)> {
    let n = d.n();
    if n < 2 {
        return Err(SolverError::DegenerateColumn(
            "standardization needs at least two observations".into(),
        ));
    }
    let mut x = d.x.clone();
    let mut x_mean = Vec::with_capacity(d.p());
    let mut x_scale = Vec::with_capacity(d.p());
    for j in 0..d.p() {
        let col = x.col_mut(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / (n - 1) as f64).sqrt();
        if !(sd > 1e-12 * (1.0 + mean.abs())) {
            return Err(SolverError::DegenerateColumn(format!(
                "column {} ({}) is constant",
                j,
                d.feature_name(j)
            )));
        }
        for v in col.iter_mut() {
            *v = (*v - mean) / sd;
        }
        x_mean.push(mean);
        x_scale.push(sd);
    }
    let y_mean = d.y.iter().sum::<f64>() / n as f64;
    let y = d.y.iter().map(|v| v - y_mean).collect();
    let out = Dataset {
        x,
        y,
        feature_names: d.feature_names.clone(),
    };
    Ok((
        out,
        Standardization {
            x_mean,
            x_scale,
            y_mean,
        },
    ))
}

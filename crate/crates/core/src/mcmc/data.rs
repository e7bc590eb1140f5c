use crate::{Error, Result};

/// Observations stored row-major, `dim` values per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidParameter(format!(
                "only 1- and 2-dimensional data are supported, got {dim}"
            )));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(format!(
                "{} values do not split into rows of {dim}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value in row {}",
                i / dim
            )));
        }
        Ok(Self { dim, values })
    }

    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values)
    }

    pub fn bivariate(rows: &[[f64; 2]]) -> Result<Self> {
        Self::new(2, rows.iter().flatten().copied().collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    /// Coordinate-wise sample mean; zeros for an empty dataset.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        if self.is_empty() {
            return m;
        }
        for row in self.rows() {
            for (mi, x) in m.iter_mut().zip(row) {
                *mi += x;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|mi| *mi /= n);
        m
    }
}

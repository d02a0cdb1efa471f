use crate::error::{Error, Result};

/// A row-major block of `len` points in `dim`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    data: Vec<f64>,
    dim: usize,
}

impl Points {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("points must have dimension >= 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::input(format!(
                "buffer of length {} is not a whole number of {dim}-dimensional rows",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("non-finite value at row {}, column {}", pos / dim, pos % dim)));
        }
        Ok(Points { data, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(1);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Points::new(data, dim)
    }

    /// One-dimensional points.
    pub fn from_column(values: &[f64]) -> Result<Self> {
        Points::new(values.to_vec(), 1)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rows in the order given by `index`.
    pub fn select(&self, index: &[usize]) -> Points {
        let mut data = Vec::with_capacity(index.len() * self.dim);
        for &i in index {
            data.extend_from_slice(self.row(i));
        }
        Points { data, dim: self.dim }
    }

    /// Column-wise concatenation `[self | other]`.
    pub fn hstack(&self, other: &Points) -> Result<Points> {
        if self.len() != other.len() {
            return Err(Error::input(format!("cannot stack {} rows with {} rows", self.len(), other.len())));
        }
        let dim = self.dim + other.dim;
        let mut data = Vec::with_capacity(self.len() * dim);
        for (a, b) in self.rows().zip(other.rows()) {
            data.extend_from_slice(a);
            data.extend_from_slice(b);
        }
        Ok(Points { data, dim })
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

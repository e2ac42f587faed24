use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An ordered point cloud: `len` points in `R^dim`, stored row-major.
///
/// Holds both Cα backbones (`dim == 3`) and per-residue language-model
/// embeddings of a single layer (`dim` in the hundreds or thousands).
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    data: Vec<f64>,
    len: usize,
    dim: usize,
}

impl PointCloud {
    /// Builds a cloud from a row-major buffer of `len * dim` finite values.
    pub fn from_row_major(len: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if len < 2 {
            return Err(Error::TooFewPoints(len));
        }
        if data.len() != len * dim {
            return Err(Error::BadShape {
                rows: len,
                cols: dim,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self { data, len, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::BadShape {
                    rows: rows.len(),
                    cols: dim,
                    len: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(rows.len(), dim, data)
    }

    /// Number of points `L`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Ambient dimension `m`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// `L x m` matrix with one point per row.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len, self.dim, &self.data)
    }

    /// Applies `f` to every point, keeping the order.
    pub fn map_points(&self, mut f: impl FnMut(&[f64], &mut [f64])) -> Self {
        let mut data = alloc::vec![0.0; self.data.len()];
        for (src, dst) in self
            .data
            .chunks_exact(self.dim)
            .zip(data.chunks_exact_mut(self.dim))
        {
            f(src, dst);
        }
        Self {
            data,
            len: self.len,
            dim: self.dim,
        }
    }

    /// Mean Euclidean distance from each point to its nearest other point.
    pub fn mean_nearest_neighbor_distance(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.len {
            let best = (0..self.len)
                .filter(|&j| j != i)
                .map(|j| squared_distance(self.point(i), self.point(j)))
                .fold(f64::INFINITY, f64::min);
            total += libm::sqrt(best);
        }
        total / self.len as f64
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

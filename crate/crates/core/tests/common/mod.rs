#![allow(dead_code)]

use nalgebra::DMatrix;
use protgeom_core::{PointCloud, SrvShape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn random_cloud(len: usize, dim: usize, rng: &mut impl Rng) -> PointCloud {
    let m = gaussian_matrix(len, dim, rng);
    PointCloud::from_row_major(len, dim, m.transpose().as_slice().to_vec()).unwrap()
}

/// A random walk with unit steps: chain-like, no repeated points.
pub fn random_walk(len: usize, dim: usize, rng: &mut impl Rng) -> PointCloud {
    let mut rows = vec![vec![0.0; dim]];
    for i in 1..len {
        let step: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = step.iter().map(|x| x * x).sum::<f64>().sqrt();
        let prev = rows[i - 1].clone();
        rows.push(prev.iter().zip(&step).map(|(p, s)| p + s / n).collect());
    }
    PointCloud::from_rows(&rows).unwrap()
}

/// Haar-distributed rotation in SO(dim).
pub fn random_rotation(dim: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let qr = gaussian_matrix(dim, dim, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

pub fn random_shape(samples: usize, dim: usize, rng: &mut impl Rng) -> SrvShape {
    SrvShape::normalized(gaussian_matrix(samples, dim, rng)).unwrap()
}

/// Applies `x -> scale * x R^T + shift` to every point.
pub fn transform(
    cloud: &PointCloud,
    rotation: &DMatrix<f64>,
    scale: f64,
    shift: &[f64],
) -> PointCloud {
    cloud.map_points(|src, dst| {
        for (r, out) in dst.iter_mut().enumerate() {
            *out = scale
                * (0..src.len())
                    .map(|c| rotation[(r, c)] * src[c])
                    .sum::<f64>()
                + shift[r];
        }
    })
}

pub fn l2(a: &DMatrix<f64>) -> f64 {
    (a.dot(a) / a.nrows() as f64).sqrt()
}

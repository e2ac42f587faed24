//! Population statistics on the shape space.
//!
//! The mean is the Karcher mean: the minimizer of the sum of squared
//! geodesic distances to the rotation-aligned population, found by
//! Riemannian gradient descent on the sphere. Spread is summarized by the
//! Fréchet radius (mean distance to the mean) and by the participation
//! ratio `(Σλ)² / Σλ²` of a covariance spectrum.

use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::cloud::PointCloud;
use crate::curve::{fit_and_resample, inner, norm, SrvShape};
use crate::error::{Error, Result};
use crate::par;
use crate::shape_space::{align, distances, exp_unchecked, pairwise_geodesic, sphere_log};

/// Gradient-descent settings for [`karcher_mean`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KarcherOptions {
    pub step: f64,
    /// Stop once the mean log-map vector is shorter than this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for KarcherOptions {
    fn default() -> Self {
        Self {
            step: 1.0,
            tolerance: 1e-6,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KarcherResult {
    pub mean: SrvShape,
    /// Number of exponential-map updates taken.
    pub iterations: usize,
    /// Norm of the mean log-map vector at the returned mean.
    pub final_gradient_norm: f64,
    pub converged: bool,
    /// `Σ d²(p, y_i)` at the start and after every update.
    pub objective_trace: Vec<f64>,
}

fn check_population(shapes: &[SrvShape]) -> Result<()> {
    let first = shapes.first().ok_or(Error::EmptyInput)?;
    for s in &shapes[1..] {
        if s.shape() != first.shape() {
            return Err(Error::DimensionMismatch {
                left: first.shape(),
                right: s.shape(),
            });
        }
    }
    Ok(())
}

/// Index of the shape with the smallest mean geodesic distance to the
/// others; ties go to the lower index.
pub fn medoid(shapes: &[SrvShape]) -> Result<usize> {
    check_population(shapes)?;
    let dist = pairwise_geodesic(shapes)?;
    let mut best = (0, f64::INFINITY);
    for i in 0..shapes.len() {
        let total: f64 = dist.row(i).iter().sum();
        if total < best.1 {
            best = (i, total);
        }
    }
    Ok(best.0)
}

/// Tangent vectors `log_p(align(y_i, p))`, in input order.
fn logs_at(p: &SrvShape, shapes: &[SrvShape]) -> Result<Vec<DMatrix<f64>>> {
    par::try_map(shapes, |y| {
        let aligned = align(y, p)?;
        Ok(sphere_log(p, &aligned)?.into_vector())
    })
}

/// Karcher mean of a population of shapes modulo rotation.
///
/// Starts at the medoid and iterates `p ← exp_p(step · mean_i log_p(y_i))`,
/// re-aligning every `y_i` to the current `p` on each pass.
pub fn karcher_mean(shapes: &[SrvShape], options: &KarcherOptions) -> Result<KarcherResult> {
    check_population(shapes)?;
    let n = shapes.len() as f64;
    let mut mean = shapes[medoid(shapes)?].clone();
    let mut objective_trace = Vec::new();
    let mut iterations = 0;

    loop {
        let logs = logs_at(&mean, shapes)?;
        let (t, m) = mean.shape();
        let mut gradient = DMatrix::zeros(t, m);
        let mut objective = 0.0;
        for v in &logs {
            gradient += v;
            objective += inner(v, v);
        }
        gradient /= n;
        objective_trace.push(objective);

        let gradient_norm = norm(&gradient);
        let converged = gradient_norm < options.tolerance;
        if converged || iterations >= options.max_iterations {
            return Ok(KarcherResult {
                mean,
                iterations,
                final_gradient_norm: gradient_norm,
                converged,
                objective_trace,
            });
        }
        mean = exp_unchecked(&mean, &(gradient * options.step));
        iterations += 1;
    }
}

/// Distances from a population to a center, and their means.
#[derive(Debug, Clone, PartialEq)]
pub struct FrechetRadius {
    pub geodesic: f64,
    pub chordal: f64,
    pub geodesic_distances: Vec<f64>,
    pub chordal_distances: Vec<f64>,
}

/// Mean distance from each rotation-aligned shape to `center`.
pub fn frechet_radius(shapes: &[SrvShape], center: &SrvShape) -> Result<FrechetRadius> {
    check_population(shapes)?;
    if shapes[0].shape() != center.shape() {
        return Err(Error::DimensionMismatch {
            left: shapes[0].shape(),
            right: center.shape(),
        });
    }
    let pairs = par::try_map(shapes, |y| distances(center, y))?;
    let (geodesic_distances, chordal_distances): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let n = shapes.len() as f64;
    Ok(FrechetRadius {
        geodesic: geodesic_distances.iter().sum::<f64>() / n,
        chordal: chordal_distances.iter().sum::<f64>() / n,
        geodesic_distances,
        chordal_distances,
    })
}

/// Descending covariance eigenvalues and their participation ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// `(Σλ)² / Σλ²`, or 0 when `degenerate`.
    pub effective_dimension: f64,
    /// Set when the population has no variance to rounding precision.
    pub degenerate: bool,
}

/// `(Σλ)² / Σλ²`; `None` for an all-zero spectrum.
pub fn effective_dimension(eigenvalues: &[f64]) -> Option<f64> {
    // Scaling by the largest eigenvalue keeps equal spectra exact.
    let top = eigenvalues.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return None;
    }
    let sum: f64 = eigenvalues.iter().map(|l| l / top).sum();
    let sum_sq: f64 = eigenvalues.iter().map(|l| (l / top) * (l / top)).sum();
    Some(sum * sum / sum_sq)
}

/// How [`pca_spectrum`] forms its eigenproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectrumMethod {
    /// The `N x N` Gram matrix when the dimension exceeds the sample count,
    /// otherwise the `D x D` covariance.
    #[default]
    Auto,
    Gram,
    Covariance,
}

/// Sample covariance spectrum (divisor `N - 1`) of `N` vectors of equal length.
///
/// Only the leading `min(N, D)` eigenvalues are returned; the rest vanish.
/// Eigenvalues are sorted descending and tiny negative values from rounding
/// are clamped to zero.
pub fn pca_spectrum(samples: &[&[f64]], method: SpectrumMethod) -> Result<Spectrum> {
    let count = samples.len();
    if count < 2 {
        return Err(Error::EmptyInput);
    }
    let dim = samples[0].len();
    if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
        return Err(Error::DimensionMismatch {
            left: (1, dim),
            right: (1, bad.len()),
        });
    }
    let mut mean = alloc::vec![0.0; dim];
    for s in samples {
        for (acc, x) in mean.iter_mut().zip(s.iter()) {
            *acc += x;
        }
    }
    for v in &mut mean {
        *v /= count as f64;
    }
    let scale = 1.0 / (count - 1) as f64;

    let use_gram = match method {
        SpectrumMethod::Auto => dim > count,
        SpectrumMethod::Gram => true,
        SpectrumMethod::Covariance => false,
    };
    let matrix = if use_gram {
        let pairs: Vec<(usize, usize)> = (0..count)
            .flat_map(|i| (i..count).map(move |j| (i, j)))
            .collect();
        let dots = par::map(&pairs, |&(i, j)| {
            samples[i]
                .iter()
                .zip(samples[j].iter())
                .zip(&mean)
                .map(|((a, b), mu)| (a - mu) * (b - mu))
                .sum::<f64>()
        });
        let mut gram = DMatrix::zeros(count, count);
        for (&(i, j), d) in pairs.iter().zip(dots) {
            gram[(i, j)] = d * scale;
            gram[(j, i)] = d * scale;
        }
        gram
    } else {
        let centered = DMatrix::from_fn(count, dim, |i, k| samples[i][k] - mean[k]);
        centered.tr_mul(&centered) * scale
    };

    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(matrix)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    eigenvalues.truncate(count.min(dim));
    for l in &mut eigenvalues {
        *l = l.max(0.0);
    }

    // Variance at rounding level relative to the data itself counts as none.
    let energy = samples
        .iter()
        .map(|s| s.iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        / count as f64;
    let total: f64 = eigenvalues.iter().sum();
    let degenerate = total <= 1e-24 * energy || total == 0.0;
    let effective_dimension = if degenerate {
        0.0
    } else {
        effective_dimension(&eigenvalues).unwrap_or(0.0)
    };
    Ok(Spectrum {
        eigenvalues,
        effective_dimension,
        degenerate,
    })
}

/// Tangent PCA at `mean`: the covariance spectrum of `log_mean(align(y_i, mean))`
/// under the discrete L2 metric.
pub fn tangent_pca(shapes: &[SrvShape], mean: &SrvShape) -> Result<Spectrum> {
    check_population(shapes)?;
    if shapes.len() < 2 {
        return Err(Error::EmptyInput);
    }
    if shapes[0].shape() != mean.shape() {
        return Err(Error::DimensionMismatch {
            left: shapes[0].shape(),
            right: mean.shape(),
        });
    }
    let logs = logs_at(mean, shapes)?;
    let views: Vec<&[f64]> = logs.iter().map(|v| v.as_slice()).collect();
    let mut spectrum = pca_spectrum(&views, SpectrumMethod::Auto)?;
    let weight = 1.0 / mean.sample_count() as f64;
    for l in &mut spectrum.eigenvalues {
        *l *= weight;
    }
    Ok(spectrum)
}

/// Ordinary PCA on clouds resampled to `samples` points and flattened.
pub fn flat_effective_dimension(clouds: &[PointCloud], samples: usize) -> Result<Spectrum> {
    let first = clouds.first().ok_or(Error::EmptyInput)?;
    if clouds.len() < 2 {
        return Err(Error::EmptyInput);
    }
    if let Some(bad) = clouds.iter().find(|c| c.dim() != first.dim()) {
        return Err(Error::DimensionMismatch {
            left: (first.len(), first.dim()),
            right: (bad.len(), bad.dim()),
        });
    }
    let curves = par::try_map(clouds, |c| fit_and_resample(c, samples))?;
    let views: Vec<&[f64]> = curves.iter().map(|c| c.samples.as_slice()).collect();
    pca_spectrum(&views, SpectrumMethod::Auto)
}

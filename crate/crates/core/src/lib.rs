//! Geometry of ordered point clouds: square-root velocity shape spaces and
//! k-nearest-neighbor graph filtrations.
//!
//! The crate is `no_std` (with `alloc`) when built without the default
//! `std` feature. The `rayon` feature parallelizes per-shape and
//! per-protein work; results are reduced in input order, so they do not
//! depend on the thread count.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod cloud;
pub mod curve;
pub mod error;
pub mod filtration;
pub mod manifold_stats;
mod par;
pub mod shape_space;

pub use cloud::PointCloud;
pub use curve::{fit_and_resample, srv_inverse, srv_transform, Curve, QuadraticSpline, SrvShape};
pub use error::{Error, Result};
pub use filtration::{
    adjacency_distance, baseline_distance, expected_random_distance, filtration_moment,
    knn_filtration, Adjacency, KnnFiltration, MomentCurve, MomentOptions,
};
pub use manifold_stats::{
    flat_effective_dimension, frechet_radius, karcher_mean, tangent_pca, FrechetRadius,
    KarcherOptions, KarcherResult, Spectrum,
};
pub use shape_space::{
    chordal_distance, geodesic_distance, optimal_rotation, sphere_exp, sphere_log, Rotation,
    TangentVector,
};

/// Cloud to unit SRV shape at `samples` resolution.
pub fn shape_of(cloud: &PointCloud, samples: usize) -> Result<SrvShape> {
    srv_transform(&fit_and_resample(cloud, samples)?)
}

//! Geometry of the unit sphere of SRV shapes modulo rotations.
//!
//! Rotations act on the right of the `T x m` sample matrices: a shape `q`
//! rotated by `R` is `q Rᵀ`, i.e. every sample row is rotated.

use nalgebra::{DMatrix, DVector};

use crate::curve::{inner, norm, SrvShape};
use crate::error::{Error, Result};

/// Arc length below which the log and exp maps return their base point.
pub const SMALL_ARC: f64 = 1e-12;
/// Distance to `π` within which two points count as antipodal.
pub const ANTIPODAL_GAP: f64 = 1e-9;

/// A proper rotation of `R^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    matrix: DMatrix<f64>,
}

impl Rotation {
    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    /// Wraps an orthogonal matrix, checking `|RᵀR - I| < 1e-9` and `det R > 0`.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Option<Self> {
        if !matrix.is_square() {
            return None;
        }
        let n = matrix.nrows();
        let defect = (matrix.tr_mul(&matrix) - DMatrix::<f64>::identity(n, n)).norm();
        if defect < 1e-9 && matrix.determinant() > 0.0 {
            Some(Self { matrix })
        } else {
            None
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Rotates every sample row of `shape`.
    pub fn apply(&self, shape: &SrvShape) -> SrvShape {
        SrvShape::from_unit(shape.q() * self.matrix.transpose())
    }
}

fn check_same_shape(a: &SrvShape, b: &SrvShape) -> Result<()> {
    if a.shape() == b.shape() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            left: a.shape(),
            right: b.shape(),
        })
    }
}

/// Rotation `R` minimizing `|q1 - q2 Rᵀ|` over `SO(m)`.
///
/// With `q2ᵀ q1 = U Σ Vᵀ` the minimizer is `V D Uᵀ`, where `D` flips the
/// direction of the smallest singular value when `det(V Uᵀ) < 0`.
pub fn optimal_rotation(q1: &SrvShape, q2: &SrvShape) -> Result<Rotation> {
    check_same_shape(q1, q2)?;
    let cross = q2.q().tr_mul(q1.q());
    let svd = cross.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let v = v_t.transpose();

    let mut rotation = &v * u.transpose();
    if rotation.determinant() < 0.0 {
        let weakest = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut flip = DVector::from_element(v.ncols(), 1.0);
        flip[weakest] = -1.0;
        rotation = v * DMatrix::from_diagonal(&flip) * u.transpose();
    }
    Ok(Rotation { matrix: rotation })
}

/// `q` rotated into optimal alignment with `target`.
pub fn align(q: &SrvShape, target: &SrvShape) -> Result<SrvShape> {
    Ok(optimal_rotation(target, q)?.apply(q))
}

/// Angle between two unit shapes without any alignment, in `[0, π]`.
pub fn arc_length(a: &SrvShape, b: &SrvShape) -> Result<f64> {
    check_same_shape(a, b)?;
    let diff = norm(&(a.q() - b.q()));
    let sum = norm(&(a.q() + b.q()));
    Ok(2.0 * libm::atan2(diff, sum))
}

/// `|q1 - q2 Rᵀ|` at the optimal rotation.
pub fn chordal_distance(q1: &SrvShape, q2: &SrvShape) -> Result<f64> {
    Ok(distances(q1, q2)?.1)
}

/// Great-circle distance between the rotation classes of two shapes, in `[0, π]`.
pub fn geodesic_distance(q1: &SrvShape, q2: &SrvShape) -> Result<f64> {
    Ok(distances(q1, q2)?.0)
}

/// Both distances from one alignment: `(geodesic, chordal)`.
pub fn distances(q1: &SrvShape, q2: &SrvShape) -> Result<(f64, f64)> {
    // The SVD recovers the identity only up to rounding.
    if q1 == q2 {
        return Ok((0.0, 0.0));
    }
    let aligned = align(q2, q1)?;
    let chord = norm(&(q1.q() - aligned.q()));
    Ok((arc_length(q1, &aligned)?, chord))
}

/// A tangent vector to the unit sphere at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: SrvShape,
    v: DMatrix<f64>,
}

impl TangentVector {
    /// Projects `v` onto the tangent space at `base`.
    pub fn project(base: SrvShape, v: DMatrix<f64>) -> Result<Self> {
        if base.shape() != v.shape() {
            return Err(Error::DimensionMismatch {
                left: base.shape(),
                right: v.shape(),
            });
        }
        let along = inner(base.q(), &v);
        let v = v - base.q() * along;
        Ok(Self { base, v })
    }

    pub fn zero(base: SrvShape) -> Self {
        let (t, m) = base.shape();
        Self {
            base,
            v: DMatrix::zeros(t, m),
        }
    }

    pub fn base(&self) -> &SrvShape {
        &self.base
    }

    pub fn vector(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn into_vector(self) -> DMatrix<f64> {
        self.v
    }

    pub fn norm(&self) -> f64 {
        norm(&self.v)
    }

    /// `⟨v, base⟩`, zero up to rounding.
    pub fn tangency_defect(&self) -> f64 {
        inner(&self.v, self.base.q())
    }
}

/// Sphere logarithm of `y` at `p`. The caller aligns `y` to `p` first.
///
/// `log_p(y) = d / sin d · (y - cos d · p)` with `d` the arc length, computed
/// as `d` times the unit direction of `y - ⟨p, y⟩ p`.
pub fn sphere_log(p: &SrvShape, y: &SrvShape) -> Result<TangentVector> {
    let d = arc_length(p, y)?;
    if core::f64::consts::PI - d < ANTIPODAL_GAP {
        return Err(Error::AntipodalPoints(d));
    }
    if d < SMALL_ARC {
        return Ok(TangentVector::zero(p.clone()));
    }
    let mut v = y.q() - p.q() * p.inner(y);
    // Re-project once; the first subtraction leaves a rounding-level normal part.
    let residual = inner(&v, p.q());
    v -= p.q() * residual;
    let n = norm(&v);
    if n == 0.0 {
        return Ok(TangentVector::zero(p.clone()));
    }
    v *= d / n;
    Ok(TangentVector { base: p.clone(), v })
}

/// Sphere exponential `cos|v| p + sin|v| v/|v|`.
pub fn sphere_exp(p: &SrvShape, v: &TangentVector) -> Result<SrvShape> {
    if p.shape() != v.base.shape() {
        return Err(Error::DimensionMismatch {
            left: p.shape(),
            right: v.base.shape(),
        });
    }
    if v.base != *p {
        return Err(Error::ForeignTangent);
    }
    Ok(exp_unchecked(p, &v.v))
}

/// Exponential map for a raw tangent matrix known to be based at `p`.
pub(crate) fn exp_unchecked(p: &SrvShape, v: &DMatrix<f64>) -> SrvShape {
    let len = norm(v);
    if len < SMALL_ARC {
        return p.clone();
    }
    let q = p.q() * libm::cos(len) + v * (libm::sin(len) / len);
    // Renormalize to hold the unit-norm invariant over many steps.
    let n = norm(&q);
    SrvShape::from_unit(q / n)
}

/// Symmetric matrix of pairwise geodesic distances, computed in parallel.
pub fn pairwise_geodesic(shapes: &[SrvShape]) -> Result<DMatrix<f64>> {
    let n = shapes.len();
    let pairs: alloc::vec::Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let values = crate::par::try_map(&pairs, |&(i, j)| geodesic_distance(&shapes[i], &shapes[j]))?;
    let mut out = DMatrix::zeros(n, n);
    for (&(i, j), d) in pairs.iter().zip(values) {
        out[(i, j)] = d;
        out[(j, i)] = d;
    }
    Ok(out)
}

//! Curves through ordered point clouds and their square-root velocity form.
//!
//! A cloud of `L` points is read as a curve on `[0, 1]` with the points at
//! uniform knots `l / (L - 1)`. The curve is a C¹ piecewise quadratic through
//! every point. A quadratic interpolant has one free parameter per component;
//! it is fixed by minimizing the bending energy `∫ |γ''|²`, which reproduces
//! straight lines, degenerates to linear interpolation for two points and is
//! symmetric under reversing the point order.
//!
//! All integrals over `[0, 1]` use the `T`-point rule `⟨a, b⟩ = (1/T) Σ a_i·b_i`.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Resolution used when none is given.
pub const DEFAULT_SAMPLES: usize = 1000;

/// Discrete L2 inner product of two `T x m` sample matrices.
pub fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b) / a.nrows() as f64
}

/// Discrete L2 norm of a `T x m` sample matrix.
pub fn norm(a: &DMatrix<f64>) -> f64 {
    libm::sqrt(inner(a, a))
}

/// C¹ piecewise-quadratic interpolant through a point cloud.
#[derive(Debug, Clone)]
pub struct QuadraticSpline {
    /// `L x m`, the interpolated points.
    values: DMatrix<f64>,
    /// `L x m`, the first derivative at each knot.
    slopes: DMatrix<f64>,
}

impl QuadraticSpline {
    pub fn fit(cloud: &PointCloud) -> Self {
        let len = cloud.len();
        let dim = cloud.dim();
        let values = cloud.to_matrix();
        let pieces = (len - 1) as f64;
        let mut slopes = DMatrix::zeros(len, dim);

        for c in 0..dim {
            // Secant slopes; the interval width is 1 / (L - 1).
            let secant: Vec<f64> = (0..len - 1)
                .map(|l| (values[(l + 1, c)] - values[(l, c)]) * pieces)
                .collect();

            // Slopes with the first one pinned at zero: a_{l+1} = 2 s_l - a_l.
            // Every admissible solution is a_l + (-1)^l d for a scalar d.
            let mut particular = Vec::with_capacity(len);
            particular.push(0.0);
            for l in 0..len - 1 {
                particular.push(2.0 * secant[l] - particular[l]);
            }

            // Curvature on piece l is proportional to s_l - slope_l, so the
            // bending energy is a quadratic in d with this minimizer.
            let shift = (0..len - 1)
                .map(|l| alternating(l) * (secant[l] - particular[l]))
                .sum::<f64>()
                / pieces;

            for l in 0..len {
                slopes[(l, c)] = particular[l] + alternating(l) * shift;
            }
        }
        Self { values, slopes }
    }

    pub fn knot_count(&self) -> usize {
        self.values.nrows()
    }

    pub fn knot_values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// First derivative of the spline at every knot.
    pub fn knot_slopes(&self) -> &DMatrix<f64> {
        &self.slopes
    }

    /// Value and first derivative at parameter `t` in `[0, 1]`.
    pub fn evaluate(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let pieces = self.knot_count() - 1;
        let scaled = t.clamp(0.0, 1.0) * pieces as f64;
        let piece = (libm::floor(scaled) as usize).min(pieces - 1);
        self.evaluate_local(piece, scaled - piece as f64)
    }

    /// Evaluates on piece `piece` at local coordinate `u` in `[0, 1]`.
    fn evaluate_local(&self, piece: usize, u: f64) -> (Vec<f64>, Vec<f64>) {
        let width = 1.0 / (self.knot_count() - 1) as f64;
        let dim = self.values.ncols();
        let mut value = Vec::with_capacity(dim);
        let mut slope = Vec::with_capacity(dim);
        for c in 0..dim {
            let p = self.values[(piece, c)];
            let d0 = self.slopes[(piece, c)];
            let d1 = self.slopes[(piece + 1, c)];
            value.push(p + width * u * (d0 + 0.5 * (d1 - d0) * u));
            slope.push(d0 + (d1 - d0) * u);
        }
        (value, slope)
    }

    /// Evaluates at the `samples` uniform parameters `i / (samples - 1)`.
    ///
    /// Parameters that coincide with knots return the knot value and slope
    /// exactly.
    pub fn resample(&self, samples: usize) -> Curve {
        let len = self.knot_count();
        let dim = self.values.ncols();
        let mut points = DMatrix::zeros(samples, dim);
        let mut velocity = DMatrix::zeros(samples, dim);
        let denom = samples - 1;
        for i in 0..samples {
            // t * (L - 1) = i (L - 1) / (T - 1), split exactly into piece and remainder.
            let num = i * (len - 1);
            let (piece, rem) = (num / denom, num % denom);
            if rem == 0 {
                points.row_mut(i).copy_from(&self.values.row(piece));
                velocity.row_mut(i).copy_from(&self.slopes.row(piece));
            } else {
                let (v, d) = self.evaluate_local(piece, rem as f64 / denom as f64);
                for c in 0..dim {
                    points[(i, c)] = v[c];
                    velocity[(i, c)] = d[c];
                }
            }
        }
        Curve {
            samples: points,
            derivatives: velocity,
            repeated_points: 0,
        }
    }
}

fn alternating(l: usize) -> f64 {
    if l % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A curve sampled at `T` uniform parameters on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    /// `T x m` positions.
    pub samples: DMatrix<f64>,
    /// `T x m` first derivatives with respect to the parameter.
    pub derivatives: DMatrix<f64>,
    /// Number of consecutive duplicate points in the source cloud. Such
    /// pieces can carry zero velocity, which the SRV map sends to `q = 0`.
    pub repeated_points: usize,
}

impl Curve {
    pub fn new(samples: DMatrix<f64>, derivatives: DMatrix<f64>) -> Result<Self> {
        if samples.shape() != derivatives.shape() {
            return Err(Error::DimensionMismatch {
                left: samples.shape(),
                right: derivatives.shape(),
            });
        }
        if samples.nrows() < 2 {
            return Err(Error::TooFewSamples(samples.nrows()));
        }
        if samples.ncols() == 0 {
            return Err(Error::ZeroDimension);
        }
        for m in [&samples, &derivatives] {
            if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row: pos % m.nrows(),
                    col: pos / m.nrows(),
                });
            }
        }
        Ok(Self {
            samples,
            derivatives,
            repeated_points: 0,
        })
    }

    pub fn sample_count(&self) -> usize {
        self.samples.nrows()
    }

    pub fn dim(&self) -> usize {
        self.samples.ncols()
    }

    /// Length `∫ |γ'|` under the sample quadrature.
    pub fn length(&self) -> f64 {
        let total: f64 = self.derivatives.row_iter().map(|r| r.norm()).sum();
        total / self.sample_count() as f64
    }
}

/// Fits the quadratic interpolant through `cloud` and samples it at
/// `samples` uniform parameters.
pub fn fit_and_resample(cloud: &PointCloud, samples: usize) -> Result<Curve> {
    if samples < 2 {
        return Err(Error::TooFewSamples(samples));
    }
    let mut curve = QuadraticSpline::fit(cloud).resample(samples);
    curve.repeated_points = cloud
        .points()
        .zip(cloud.points().skip(1))
        .filter(|(a, b)| a == b)
        .count();
    Ok(curve)
}

/// Square-root velocity representation of a curve, scaled onto the unit
/// sphere of the discrete L2 space.
#[derive(Debug, Clone, PartialEq)]
pub struct SrvShape {
    q: DMatrix<f64>,
}

impl SrvShape {
    /// Rescales `q` to unit norm.
    pub fn normalized(q: DMatrix<f64>) -> Result<Self> {
        if q.nrows() < 2 {
            return Err(Error::TooFewSamples(q.nrows()));
        }
        if q.ncols() == 0 {
            return Err(Error::ZeroDimension);
        }
        if let Some(pos) = q.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos % q.nrows(),
                col: pos / q.nrows(),
            });
        }
        let n = norm(&q);
        if n == 0.0 {
            return Err(Error::ZeroCurve);
        }
        Ok(Self { q: q / n })
    }

    /// Wraps a matrix already known to have unit norm.
    pub(crate) fn from_unit(q: DMatrix<f64>) -> Self {
        debug_assert!((norm(&q) - 1.0).abs() < 1e-9);
        Self { q }
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.q
    }

    pub fn sample_count(&self) -> usize {
        self.q.nrows()
    }

    pub fn dim(&self) -> usize {
        self.q.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.q.shape()
    }

    /// Discrete L2 inner product with another shape.
    pub fn inner(&self, other: &SrvShape) -> f64 {
        inner(&self.q, &other.q)
    }

    /// Flattens row by row into a vector of length `T * m`.
    pub fn to_row_major(&self) -> Vec<f64> {
        self.q.transpose().as_slice().to_vec()
    }
}

/// `q_i = γ'_i / sqrt|γ'_i|` (zero where `γ'_i = 0`), then scaled to unit norm.
pub fn srv_transform(curve: &Curve) -> Result<SrvShape> {
    let mut q = curve.derivatives.clone();
    for mut row in q.row_iter_mut() {
        let speed = row.norm();
        if speed > 0.0 {
            row /= libm::sqrt(speed);
        } else {
            row.fill(0.0);
        }
    }
    SrvShape::normalized(q)
}

/// Rebuilds a curve from its SRV form: velocity `q_i |q_i|`, positions by the
/// cumulative trapezoid rule starting at `origin`.
pub fn srv_inverse(srv: &SrvShape, origin: &[f64]) -> Result<Curve> {
    let (samples, dim) = srv.shape();
    if origin.len() != dim {
        return Err(Error::DimensionMismatch {
            left: (1, origin.len()),
            right: (samples, dim),
        });
    }
    let mut velocity = srv.q.clone();
    for mut row in velocity.row_iter_mut() {
        let n = row.norm();
        row *= n;
    }
    let step = 1.0 / (samples - 1) as f64;
    let mut points = DMatrix::zeros(samples, dim);
    for c in 0..dim {
        points[(0, c)] = origin[c];
    }
    for i in 1..samples {
        for c in 0..dim {
            points[(i, c)] =
                points[(i - 1, c)] + 0.5 * step * (velocity[(i - 1, c)] + velocity[(i, c)]);
        }
    }
    Curve::new(points, velocity)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(rows: &[[f64; 3]]) -> PointCloud {
        PointCloud::from_rows(rows).unwrap()
    }

    #[test]
    fn collinear_points_give_a_straight_line() {
        let c = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        let curve = fit_and_resample(&c, 5).unwrap();
        for i in 0..5 {
            let t = i as f64 / 4.0;
            assert!((curve.samples[(i, 0)] - 2.0 * t).abs() < 1e-12);
            assert_eq!(curve.samples[(i, 1)], 0.0);
            assert!((curve.derivatives[(i, 0)] - 2.0).abs() < 1e-12);
            assert_eq!(curve.derivatives[(i, 2)], 0.0);
        }
    }

    #[test]
    fn two_points_interpolate_linearly() {
        let c = cloud(&[[1.0, 2.0, 3.0], [3.0, 2.0, -1.0]]);
        let curve = fit_and_resample(&c, 7).unwrap();
        for i in 0..7 {
            let t = i as f64 / 6.0;
            assert!((curve.samples[(i, 0)] - (1.0 + 2.0 * t)).abs() < 1e-12);
            assert!((curve.samples[(i, 2)] - (3.0 - 4.0 * t)).abs() < 1e-12);
            assert!((curve.derivatives[(i, 0)] - 2.0).abs() < 1e-12);
            assert!((curve.derivatives[(i, 2)] + 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spline_is_c1_and_interpolates() {
        let c = cloud(&[
            [0.0, 0.0, 0.0],
            [1.0, 2.0, 0.5],
            [3.0, 1.0, -1.0],
            [2.0, -2.0, 0.0],
        ]);
        let spline = QuadraticSpline::fit(&c);
        let width = 1.0 / 3.0;
        for l in 0..3 {
            let (end, slope_end) = spline.evaluate_local(l, 1.0);
            for k in 0..3 {
                assert!((end[k] - c.point(l + 1)[k]).abs() < 1e-12);
                assert!((slope_end[k] - spline.knot_slopes()[(l + 1, k)]).abs() < 1e-12);
            }
            let (start, _) = spline.evaluate(l as f64 * width);
            for k in 0..3 {
                assert!((start[k] - c.point(l)[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reversal_symmetry() {
        let pts = [
            [0.0, 0.0, 0.0],
            [1.0, 2.0, 0.5],
            [3.0, 1.0, -1.0],
            [2.0, -2.0, 0.0],
            [0.5, 0.5, 0.5],
        ];
        let mut rev = pts;
        rev.reverse();
        let a = fit_and_resample(&cloud(&pts), 41).unwrap();
        let b = fit_and_resample(&cloud(&rev), 41).unwrap();
        for i in 0..41 {
            for k in 0..3 {
                assert!((a.samples[(i, k)] - b.samples[(40 - i, k)]).abs() < 1e-12);
                assert!((a.derivatives[(i, k)] + b.derivatives[(40 - i, k)]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn repeated_points_are_flagged() {
        let c = cloud(&[
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [2.0, 1.0, 0.0],
        ]);
        let curve = fit_and_resample(&c, 10).unwrap();
        assert_eq!(curve.repeated_points, 1);
        assert!(srv_transform(&curve).is_ok());
    }

    #[test]
    fn sample_count_below_two_is_rejected() {
        let c = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        assert_eq!(
            fit_and_resample(&c, 1).unwrap_err(),
            Error::TooFewSamples(1)
        );
    }

    #[test]
    fn unit_speed_line_has_constant_srv() {
        let t = 20;
        let samples = DMatrix::from_fn(t, 3, |i, c| if c == 0 { i as f64 / 19.0 } else { 0.0 });
        let velocity = DMatrix::from_fn(t, 3, |_, c| if c == 0 { 1.0 } else { 0.0 });
        let srv = srv_transform(&Curve::new(samples, velocity).unwrap()).unwrap();
        for i in 0..t {
            assert!((srv.q()[(i, 0)] - 1.0).abs() < 1e-15);
            assert_eq!(srv.q()[(i, 1)], 0.0);
        }
        assert!((norm(srv.q()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn doubled_speed_gives_the_same_shape() {
        let c = cloud(&[
            [0.0, 0.0, 0.0],
            [1.0, 2.0, 0.5],
            [3.0, 1.0, -1.0],
            [2.0, -2.0, 0.0],
        ]);
        let curve = fit_and_resample(&c, 50).unwrap();
        let mut fast = curve.clone();
        fast.derivatives *= 2.0;
        let a = srv_transform(&curve).unwrap();
        let b = srv_transform(&fast).unwrap();
        assert!((a.q() - b.q()).amax() < 1e-14);
    }

    #[test]
    fn zero_curve_is_an_error() {
        let z = DMatrix::zeros(5, 2);
        assert_eq!(
            srv_transform(&Curve::new(z.clone(), z).unwrap()),
            Err(Error::ZeroCurve)
        );
    }

    #[test]
    fn constant_srv_inverts_to_a_line() {
        let q = DMatrix::from_fn(11, 2, |_, c| if c == 1 { 1.0 } else { 0.0 });
        let srv = SrvShape::normalized(q).unwrap();
        let curve = srv_inverse(&srv, &[1.0, -1.0]).unwrap();
        for i in 0..11 {
            assert_eq!(curve.samples[(i, 0)], 1.0);
            assert!((curve.samples[(i, 1)] - (-1.0 + i as f64 / 10.0)).abs() < 1e-14);
        }
        assert!(srv_inverse(&srv, &[0.0]).is_err());
    }
}

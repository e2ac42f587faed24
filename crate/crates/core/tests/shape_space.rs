mod common;

use common::*;
use nalgebra::{DMatrix, Matrix3, UnitQuaternion, Vector4};
use proptest::prelude::*;
use protgeom_core::curve::norm;
use protgeom_core::shape_space::{align, arc_length, Rotation};
use protgeom_core::{
    chordal_distance, geodesic_distance, optimal_rotation, shape_of, sphere_exp, sphere_log,
    SrvShape, TangentVector,
};
use rand::Rng;
use rand_distr::StandardNormal;

/// `|q1 - q2 Rᵀ|²` via the 3x3 cross matrix `M = q2ᵀ q1`: `2 - 2 tr(M R) / T`.
fn aligned_cost(cross: &Matrix3<f64>, r: &Matrix3<f64>, samples: usize) -> f64 {
    2.0 - 2.0 * (cross * r).trace() / samples as f64
}

#[test]
fn svd_rotation_beats_a_million_random_rotations() {
    let mut rng = rng(21);
    for _ in 0..3 {
        let q1 = random_shape(40, 3, &mut rng);
        let q2 = random_shape(40, 3, &mut rng);
        let cross = Matrix3::from_iterator(q2.q().tr_mul(q1.q()).iter().copied());

        let svd = optimal_rotation(&q1, &q2).unwrap();
        let svd_r = Matrix3::from_iterator(svd.matrix().iter().copied());
        let svd_cost = aligned_cost(&cross, &svd_r, 40);

        let mut best = f64::INFINITY;
        for _ in 0..1_000_000 {
            let v = Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
            let r = UnitQuaternion::from_quaternion(v.into()).to_rotation_matrix();
            best = best.min(aligned_cost(&cross, r.matrix(), 40));
        }
        assert!(svd_cost <= best, "svd {svd_cost} vs brute force {best}");
        let direct = chordal_distance(&q1, &q2).unwrap();
        assert!((direct * direct - svd_cost).abs() < 1e-10);
    }
}

#[test]
fn known_rotation_is_recovered_in_higher_dimension() {
    let mut rng = rng(22);
    for m in [2, 3, 7, 16] {
        let q2 = random_shape(60, m, &mut rng);
        let r0 = Rotation::from_matrix(random_rotation(m, &mut rng)).unwrap();
        let q1 = r0.apply(&q2);
        let r = optimal_rotation(&q1, &q2).unwrap();
        assert!((r.matrix() - r0.matrix()).amax() < 1e-8, "m = {m}");
        assert!(chordal_distance(&q1, &q2).unwrap() < 1e-8);
        assert!(geodesic_distance(&q1, &q2).unwrap() < 1e-8);
    }
}

#[test]
fn antipodal_isotropic_shapes_have_chord_at_most_two() {
    let mut rng = rng(23);
    let q1 = random_shape(80, 3, &mut rng);
    let q2 = SrvShape::normalized(-q1.q()).unwrap();
    let d = chordal_distance(&q1, &q2).unwrap();
    assert!(d > 0.0 && d <= 2.0, "{d}");
}

#[test]
fn se_invariance_of_the_full_pipeline() {
    let mut rng = rng(24);
    for m in [3, 16] {
        let cloud = random_walk(50, m, &mut rng);
        let r = random_rotation(m, &mut rng);
        let shift: Vec<f64> = (0..m).map(|_| rng.random_range(-50.0..50.0)).collect();
        let moved = transform(&cloud, &r, 1.0, &shift);
        let a = shape_of(&cloud, 1000).unwrap();
        let b = shape_of(&moved, 1000).unwrap();
        assert!(geodesic_distance(&a, &b).unwrap() < 1e-7);
        assert!(chordal_distance(&a, &b).unwrap() < 1e-7);
    }
}

fn pair(seed: u64, t: usize, m: usize) -> (SrvShape, SrvShape) {
    let mut rng = rng(seed);
    (random_shape(t, m, &mut rng), random_shape(t, m, &mut rng))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distances_are_quotient_invariant(seed in any::<u64>(), t in 3usize..60, m in 1usize..6) {
        let (q1, q2) = pair(seed, t, m);
        let mut rng = rng(seed ^ 0x5eed);
        let r = Rotation::from_matrix(random_rotation(m, &mut rng)).unwrap();
        let rotated = r.apply(&q2);
        let (g, c) = (geodesic_distance(&q1, &q2).unwrap(), chordal_distance(&q1, &q2).unwrap());
        prop_assert!((g - geodesic_distance(&q1, &rotated).unwrap()).abs() < 1e-8);
        prop_assert!((c - chordal_distance(&q1, &rotated).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn distances_are_symmetric(seed in any::<u64>(), t in 3usize..60, m in 1usize..6) {
        let (q1, q2) = pair(seed, t, m);
        prop_assert!((geodesic_distance(&q1, &q2).unwrap() - geodesic_distance(&q2, &q1).unwrap()).abs() < 1e-8);
        prop_assert!((chordal_distance(&q1, &q2).unwrap() - chordal_distance(&q2, &q1).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn chord_and_arc_agree(seed in any::<u64>(), t in 3usize..60, m in 1usize..6) {
        let (q1, q2) = pair(seed, t, m);
        let g = geodesic_distance(&q1, &q2).unwrap();
        let c = chordal_distance(&q1, &q2).unwrap();
        prop_assert!(((2.0 - 2.0 * g.cos()).sqrt() - c).abs() < 1e-8);
        prop_assert!((0.0..=std::f64::consts::PI).contains(&g));
    }

    #[test]
    fn log_is_tangent_isometric_and_inverted_by_exp(seed in any::<u64>(), t in 3usize..60, m in 1usize..6) {
        let (p, y) = pair(seed, t, m);
        let y = align(&y, &p).unwrap();
        let v = sphere_log(&p, &y).unwrap();
        prop_assert!(v.tangency_defect().abs() < 1e-8);
        prop_assert!((v.norm() - arc_length(&p, &y).unwrap()).abs() < 1e-8);
        let back = sphere_exp(&p, &v).unwrap();
        prop_assert!((back.q() - y.q()).amax() < 1e-8);
        prop_assert!((norm(back.q()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exp_is_inverted_by_log(seed in any::<u64>(), t in 3usize..60, m in 1usize..6, len in 0.0f64..3.0) {
        let mut rng = rng(seed);
        let p = random_shape(t, m, &mut rng);
        let raw = gaussian_matrix(t, m, &mut rng);
        let v = TangentVector::project(p.clone(), raw).unwrap();
        let v = TangentVector::project(p.clone(), v.vector() * (len / v.norm())).unwrap();
        let y = sphere_exp(&p, &v).unwrap();
        let back = sphere_log(&p, &y).unwrap();
        prop_assert!((back.vector() - v.vector()).amax() < 1e-8);
    }
}

#[test]
fn rotation_validation() {
    assert!(Rotation::from_matrix(DMatrix::identity(4, 4)).is_some());
    assert!(Rotation::from_matrix(DMatrix::from_diagonal_element(3, 3, 2.0)).is_none());
    let reflect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
    assert!(Rotation::from_matrix(reflect).is_none());
}

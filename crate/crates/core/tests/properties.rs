mod common;

use brickwork::calibration::{calibrate, default_survey, synthesize_session, ModelError};
use brickwork::geometry::{fit_line_pca, min_area_rect, orthonormalize_frame, Plane, Pose};
use brickwork::projector::{project_point, tcp_pose_for_projection, unproject};
use nalgebra::{Matrix3, Vector2, Vector3};
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vector3<f64>> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn pose() -> impl Strategy<Value = Pose> {
    (vec3(1.0), 0.0..std::f64::consts::PI, vec3(2.0))
        .prop_filter_map("axis must be non-zero", |(axis, angle, t)| {
            (axis.norm() > 1e-3).then(|| Pose::from_axis_angle(&axis, angle, t))
        })
}

fn close(a: &Pose, b: &Pose, tol: f64) -> bool {
    (a.rotation - b.rotation).abs().max() < tol && (a.translation - b.translation).norm() < tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn composition_is_associative(a in pose(), b in pose(), c in pose()) {
        prop_assert!(close(&a.compose(&b).compose(&c), &a.compose(&b.compose(&c)), 1e-12));
    }

    #[test]
    fn inverse_cancels_on_both_sides(a in pose()) {
        let id = Pose::identity();
        prop_assert!(close(&a.compose(&a.inverse()), &id, 1e-12));
        prop_assert!(close(&a.inverse().compose(&a), &id, 1e-12));
        prop_assert!(close(&a.compose(&id), &a, 1e-15));
    }

    #[test]
    fn composed_transform_matches_sequential(a in pose(), b in pose(), p in vec3(3.0)) {
        let lhs = a.compose(&b).transform_point(&p);
        let rhs = a.transform_point(&b.transform_point(&p));
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn quaternion_round_trip(a in pose()) {
        let back = Pose::from_quaternion_wxyz(a.quaternion_wxyz(), a.translation).unwrap();
        prop_assert!(close(&a, &back, 1e-12));
    }

    #[test]
    fn line_fit_is_rigidly_equivariant(
        g in pose(),
        origin in vec3(1.0),
        dir in vec3(1.0),
        ts in prop::collection::vec(-1.0f64..1.0, 3..20),
        jitter in prop::collection::vec(vec3(0.01), 20),
    ) {
        prop_assume!(dir.norm() > 0.1);
        prop_assume!(ts.iter().cloned().fold(f64::MIN, f64::max) - ts.iter().cloned().fold(f64::MAX, f64::min) > 0.5);
        let pts: Vec<_> = ts.iter().zip(&jitter).map(|(t, j)| origin + dir * *t + j).collect();
        let moved: Vec<_> = pts.iter().map(|p| g.transform_point(p)).collect();
        let a = fit_line_pca(&pts).unwrap();
        let b = fit_line_pca(&moved).unwrap();
        prop_assume!(!a.ambiguous);
        let d = g.transform_vector(&a.line.direction);
        prop_assert!(d.cross(&b.line.direction).norm() < 1e-8);
        prop_assert!(b.line.distance(&g.transform_point(&a.line.point)) < 1e-9);
        prop_assert!((a.rms_residual - b.rms_residual).abs() < 1e-9);
    }

    #[test]
    fn min_rect_is_rigidly_invariant_and_encloses(
        pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..40),
        yaw in -3.2f64..3.2,
        shift in (-5.0f64..5.0, -5.0f64..5.0),
    ) {
        let pts: Vec<_> = pts.into_iter().map(|(x, y)| Vector2::new(x, y)).collect();
        let Ok(a) = min_area_rect(&pts) else { return Ok(()) };
        prop_assume!(a.area() > 1e-6);
        let (c, s) = (yaw.cos(), yaw.sin());
        let moved: Vec<_> = pts
            .iter()
            .map(|p| Vector2::new(c * p.x - s * p.y + shift.0, s * p.x + c * p.y + shift.1))
            .collect();
        let b = min_area_rect(&moved).unwrap();
        prop_assert!((a.area() - b.area()).abs() < 1e-9 * a.area().max(1.0));
        prop_assert!(pts.iter().all(|p| a.contains(p, 1e-9)));
        prop_assert!(moved.iter().all(|p| b.contains(p, 1e-9)));
    }

    #[test]
    fn projection_round_trips(seed in any::<u64>(), p in vec3(1.0), z in 0.05f64..3.0) {
        let model = common::random_model(&mut common::rng(seed));
        let q = Vector3::new(p.x, p.y, z);
        let img = project_point(&model, &q).unwrap();
        prop_assert!((unproject(&model, img.u, img.v, z) - q).norm() < 1e-12);
    }

    #[test]
    fn projection_is_scale_invariant(seed in any::<u64>(), p in vec3(1.0), z in 0.05f64..3.0, k in 0.01f64..100.0) {
        let model = common::random_model(&mut common::rng(seed));
        let q = Vector3::new(p.x, p.y, z);
        let a = project_point(&model, &q).unwrap();
        let b = project_point(&model, &(q * k)).unwrap();
        prop_assert!((a.u - b.u).abs() < 1e-12 && (a.v - b.v).abs() < 1e-12);
        prop_assert_eq!(a.in_frame, b.in_frame);
    }

    #[test]
    fn projector_pose_is_tcp_times_extrinsic(seed in any::<u64>(), tcp in pose()) {
        let model = common::random_model(&mut common::rng(seed));
        let projector = tcp.compose(&model.extrinsic);
        prop_assert!(close(&tcp_pose_for_projection(&model, &projector), &tcp, 1e-12));
    }
}

#[test]
fn orthonormalized_frames_are_proper_rotations() {
    let mut r = common::rng(11);
    for _ in 0..1000 {
        let z = common::unit_vector(&mut r) * 3.0;
        let hint = common::unit_vector(&mut r);
        if z.normalize().cross(&hint).norm() < 1e-3 {
            continue;
        }
        let m = orthonormalize_frame(&z, &hint).unwrap();
        assert!((m.transpose() * m - Matrix3::identity()).abs().max() < 1e-12);
        assert!((m.determinant() - 1.0).abs() < 1e-12);
        assert!((m.column(2) - z.normalize()).norm() < 1e-12);
        // The x column lies in the plane spanned by z and the hint, on the
        // hint's side.
        assert!(m.column(0).dot(&z.cross(&hint)).abs() < 1e-12);
        assert!(m.column(0).dot(&hint) > 0.0);
    }
}

#[test]
fn noise_free_calibration_recovers_random_models() {
    let mut r = common::rng(5);
    for i in 0..200 {
        let truth = common::random_model(&mut r);
        let session = synthesize_session(
            &truth,
            &default_survey(&truth),
            &Plane::horizontal(0.0),
            0.0,
            i,
        )
        .unwrap();
        let e = ModelError::between(&calibrate(&session).unwrap().model, &truth);
        assert!(
            e.translation < 1e-6 && e.rotation < 1e-6 && e.fov() < 1e-6,
            "model {i}: {e:?}"
        );
    }
}

#[test]
fn calibration_error_grows_with_probe_noise() {
    let truth = brickwork::projector::ProjectorModel::reference();
    let survey = default_survey(&truth);
    let median_error = |sigma: f64| {
        let mut t: Vec<f64> = (0..31)
            .map(|seed| {
                let s = synthesize_session(&truth, &survey, &Plane::horizontal(0.0), sigma, seed)
                    .unwrap();
                ModelError::between(&calibrate(&s).unwrap().model, &truth).translation
            })
            .collect();
        t.sort_by(f64::total_cmp);
        t[15]
    };
    let errs: Vec<f64> = [0.0, 1e-4, 5e-4, 2e-3]
        .into_iter()
        .map(median_error)
        .collect();
    assert!(errs[0] < 1e-9);
    assert!(errs.windows(2).all(|w| w[0] < w[1]), "{errs:?}");
}

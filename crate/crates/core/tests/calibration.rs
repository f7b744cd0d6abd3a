use demofuse::calib::refine_extrinsics;
use demofuse::geom::{exp_so3, geodesic_angle};
use demofuse::sim::{calibration_recording, desk_rig, ScenarioConfig};
use demofuse::streams::{to_events, MeasurementEvent, RigConfig};
use demofuse::{Pose, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn recording(rig: &RigConfig, noise_scale: f64, seconds: f64) -> Vec<MeasurementEvent> {
    let sc = ScenarioConfig {
        noise_scale,
        calibration_duration: seconds,
        ..ScenarioConfig::three_apples()
    };
    let dets = calibration_recording(&sc, rig, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
    to_events(0, dets)
}

fn relabeled(rig: &RigConfig, world: &Pose) -> RigConfig {
    let mut out = rig.clone();
    for cam in &mut out.cameras {
        cam.pose_wc = world.compose(&cam.pose_wc);
        cam.tag_pose_wt = world.compose(&cam.tag_pose_wt);
    }
    out
}

#[test]
fn relabeling_the_world_moves_every_estimate_rigidly() {
    let rig = desk_rig();
    let events = recording(&rig, 1.0, 10.0);
    let world = Pose::new(exp_so3(&Vec3::new(0.3, -1.2, 0.7)), Vec3::new(2.0, -1.0, 0.5));

    let base = refine_extrinsics(&events, &rig, "cam1").unwrap();
    let moved = refine_extrinsics(&events, &relabeled(&rig, &world), "cam1").unwrap();
    for (a, b) in base.iter().zip(&moved) {
        let expected = world.compose(&a.pose_wc);
        let dt = (expected.translation - b.pose_wc.translation).norm();
        let dr = geodesic_angle(&expected.rotation, &b.pose_wc.rotation);
        assert!(dt < 1e-6 && dr < 1e-6, "{}: {dt} m, {dr} rad", a.camera_id);
        assert!((a.residual - b.residual).abs() <= 1e-9 * a.residual.max(1.0));
    }
}

#[test]
fn noiseless_recording_reproduces_true_extrinsics() {
    let rig = desk_rig();
    let events = recording(&rig, 0.0, 10.0);
    for e in refine_extrinsics(&events, &rig, "cam1").unwrap() {
        let truth = rig.camera(&e.camera_id).unwrap().pose_wc;
        assert!((truth.translation - e.pose_wc.translation).norm() < 1e-6, "{}", e.camera_id);
        assert!(geodesic_angle(&truth.rotation, &e.pose_wc.rotation) < 1e-6, "{}", e.camera_id);
    }
}

#[test]
fn too_short_a_recording_is_rejected() {
    let rig = desk_rig();
    let events: Vec<_> = recording(&rig, 0.0, 10.0).into_iter().filter(|e| e.t() < 0.2).collect();
    assert!(matches!(
        refine_extrinsics(&events, &rig, "cam1"),
        Err(demofuse::Error::InsufficientCalibrationData(n)) if n < 10
    ));
}

#[test]
fn unknown_anchor_is_an_error() {
    let rig = desk_rig();
    let events = recording(&rig, 0.0, 2.0);
    assert!(matches!(refine_extrinsics(&events, &rig, "cam9"), Err(demofuse::Error::UnknownCamera(_))));
}

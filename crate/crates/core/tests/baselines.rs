use demofuse::baseline::{imu_only, marker_only};
use demofuse::eval::error_series;
use demofuse::sim::{desk_rig, simulate, ScenarioConfig};
use demofuse::streams::{Measurement, MeasurementEvent};

fn noiseless() -> ScenarioConfig {
    ScenarioConfig {
        noise_scale: 0.0,
        calibration_duration: 0.0,
        ..ScenarioConfig::three_apples()
    }
}

#[test]
fn marker_only_is_exact_without_noise() {
    let rig = desk_rig();
    let demo = simulate(&noiseless(), &rig).unwrap();
    let traj = marker_only(&demo.events(), &rig).unwrap();
    let series = error_series(&traj, &demo.ground_truth.trajectory).unwrap();
    assert!(series.points.len() > 500);
    for p in &series.points {
        assert!(p.position < 1e-9 && p.orientation < 1e-9, "t = {}: {} m, {} rad", p.t, p.position, p.orientation);
    }
}

#[test]
fn marker_only_errors_match_reported_sigma() {
    // the three picks twice over gives well over a thousand detection epochs
    let base = ScenarioConfig::three_apples();
    let sc = ScenarioConfig {
        apples: [base.apples.clone(), base.apples.clone()].concat(),
        calibration_duration: 0.0,
        seed: 7,
        ..base
    };
    let rig = desk_rig();
    let demo = simulate(&sc, &rig).unwrap();
    let traj = marker_only(&demo.events(), &rig).unwrap();
    assert!(traj.len() >= 1000, "{} epochs", traj.len());

    let gt = &demo.ground_truth.trajectory;
    let mut normalized = 0.0;
    for s in traj.samples() {
        let truth = gt.interpolate(s.t).unwrap_or_else(|| panic!("t = {} outside {:?}", s.t, gt.time_range()));
        let e = s.pose.translation - truth.translation;
        let var = s.cov_diag.unwrap();
        normalized += (0..3).map(|i| e[i] * e[i] / var[i]).sum::<f64>() / 3.0;
    }
    let ratio = normalized / traj.len() as f64;
    assert!((ratio - 1.0).abs() < 0.2, "mean squared normalized error {ratio}");
}

#[test]
fn imu_only_tracks_truth_without_noise() {
    let rig = desk_rig();
    let demo = simulate(&noiseless(), &rig).unwrap();
    assert!(demo.duration() > 20.0);
    let (traj, _) = imu_only(&demo.events(), &rig, &rig.noise).unwrap();
    let series = error_series(&traj, &demo.ground_truth.trajectory).unwrap();
    let worst = series.points.iter().map(|p| p.position).fold(0.0, f64::max);
    assert!(worst < 1e-2, "max dead-reckoning error {worst} m");
}

#[test]
fn imu_only_accel_bias_drift_follows_quadratic_law() {
    let b = 0.05;
    let sc = ScenarioConfig {
        initial_accel_bias: [b, 0.0, 0.0],
        ..noiseless()
    };
    let rig = desk_rig();
    let demo = simulate(&sc, &rig).unwrap();
    let (traj, _) = imu_only(&demo.events(), &rig, &rig.noise).unwrap();
    let t0 = traj.samples()[0].t;
    let series = error_series(&traj, &demo.ground_truth.trajectory).unwrap();

    // orientation is fixed through hold, approach and grasp, so the drift is exactly quadratic there
    let hold_and_approach = sc.hold + sc.durations.approach + sc.durations.grasp_close;
    for p in series.points.iter().filter(|p| p.t - t0 > 0.5 && p.t <= hold_and_approach) {
        let law = 0.5 * b * (p.t - t0).powi(2);
        assert!((p.position / law - 1.0).abs() < 0.02, "t = {}: {} vs {}", p.t, p.position, law);
    }
    // once the body rotates the bias direction moves, so the law is only an envelope
    for p in &series.points {
        let law = 0.5 * b * (p.t - t0).powi(2);
        assert!(p.position <= law * 1.02 + 1e-3, "t = {}: {} exceeds {}", p.t, p.position, law);
    }
}

#[test]
fn imu_only_without_imu_keeps_the_initial_sample() {
    let rig = desk_rig();
    let demo = simulate(&noiseless(), &rig).unwrap();
    let events: Vec<MeasurementEvent> = demo
        .events()
        .into_iter()
        .filter(|e| matches!(e.measurement, Measurement::Detection(_)))
        .collect();
    let (traj, _) = imu_only(&events, &rig, &rig.noise).unwrap();
    assert_eq!(traj.len(), 1);
}

#[test]
fn marker_only_leaves_occlusions_unsampled() {
    let sc = ScenarioConfig {
        occlusions: ["cam1", "cam2"]
            .iter()
            .map(|c| demofuse::sim::Occlusion {
                camera_id: c.to_string(),
                t_start: 5.0,
                t_end: 6.0,
            })
            .collect(),
        ..noiseless()
    };
    let rig = desk_rig();
    let demo = simulate(&sc, &rig).unwrap();
    let traj = marker_only(&demo.events(), &rig).unwrap();
    assert!(traj.samples().iter().all(|s| !(5.0..=6.0).contains(&s.t)));
    assert!(traj.samples().iter().any(|s| s.t < 5.0) && traj.samples().iter().any(|s| s.t > 6.0));
}

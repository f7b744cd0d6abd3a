use demofuse::ekf::{initialize, predict, update, NoiseParams, ProcessModel};
use demofuse::geom::exp_so3;
use demofuse::{FilterState, Pose, PoseObservation, Vec3};
use nalgebra::Matrix6;
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Step {
    Predict { gyro: Vec3, accel: Vec3, dt: f64 },
    Observe { offset: Vec3, tilt: Vec3, sigma_t: f64, sigma_r: f64 },
}

fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn step() -> impl Strategy<Value = Step> {
    prop_oneof![
        3 => (vec3(3.0), vec3(20.0), 1e-4..0.25f64).prop_map(|(gyro, accel, dt)| Step::Predict { gyro, accel, dt }),
        1 => (vec3(0.2), vec3(0.3), 1e-4..0.05f64, 1e-4..0.1f64)
            .prop_map(|(offset, tilt, sigma_t, sigma_r)| Step::Observe { offset, tilt, sigma_t, sigma_r }),
    ]
}

fn observation(state: &FilterState, offset: Vec3, tilt: Vec3, sigma_t: f64, sigma_r: f64) -> PoseObservation {
    let mut cov = Matrix6::zeros();
    for i in 0..3 {
        cov[(i, i)] = sigma_t * sigma_t;
        cov[(i + 3, i + 3)] = sigma_r * sigma_r;
    }
    PoseObservation {
        t: state.t,
        pose_wg: Pose::new(exp_so3(&tilt) * state.q, state.p + offset),
        cov,
        source: vec![],
    }
}

fn check(state: &FilterState) -> Result<(), TestCaseError> {
    let asym = (state.cov - state.cov.transpose()).abs().max();
    prop_assert!(asym <= 1e-9, "asymmetry {asym}");
    let min_eig = state.cov.symmetric_eigenvalues().min();
    prop_assert!(min_eig >= -1e-9, "min eigenvalue {min_eig}");
    prop_assert!((state.q.norm() - 1.0).abs() <= 1e-9, "quaternion norm {}", state.q.norm());
    prop_assert!(state.p.iter().chain(state.v.iter()).all(|x| x.is_finite()));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariance_and_attitude_stay_well_formed(steps in prop::collection::vec(step(), 1..60)) {
        let noise = NoiseParams::default();
        let model = ProcessModel::new(&noise, &Vec3::new(0.0, 0.0, -9.81));
        let first = PoseObservation {
            t: 0.0,
            pose_wg: Pose::identity(),
            cov: Matrix6::identity() * 1e-4,
            source: vec![],
        };
        let mut state = initialize(&first, &noise);
        check(&state)?;
        for s in steps {
            state = match s {
                Step::Predict { gyro, accel, dt } => predict(&state, &gyro, &accel, dt, &model).unwrap(),
                Step::Observe { offset, tilt, sigma_t, sigma_r } => {
                    let obs = observation(&state, offset, tilt, sigma_t, sigma_r);
                    update(&state, &obs, noise.gate_threshold).unwrap().state
                }
            };
            check(&state)?;
        }
    }

    #[test]
    fn rejected_updates_leave_the_state_untouched(offset in vec3(5.0).prop_filter("far", |v| v.norm() > 1.0)) {
        let noise = NoiseParams::default();
        let first = PoseObservation {
            t: 0.0,
            pose_wg: Pose::identity(),
            cov: Matrix6::identity() * 1e-4,
            source: vec![],
        };
        let state = initialize(&first, &noise);
        let obs = observation(&state, offset, Vec3::zeros(), 0.005, 0.02);
        let outcome = update(&state, &obs, noise.gate_threshold).unwrap();
        prop_assert!(!outcome.accepted);
        prop_assert_eq!(outcome.state, state);
    }
}

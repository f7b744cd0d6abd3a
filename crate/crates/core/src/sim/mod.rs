//! Scripted harvesting scenarios with ground truth and every sensor stream.
//!
//! A scenario visits each apple in turn: approach, close the gripper, twist about the
//! forward axis to detach, retreat, carry to the storage pose, open, and lift away.
//! All randomness comes from one generator seeded with the scenario seed, drawn in a
//! fixed order (IMU, detections, width, calibration recording).

mod detect;
mod imu;
mod scene;
mod script;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use detect::{calibration_motion, synthesize_detections, synthesize_detections_with, visibility, DetectionSettings, MAX_VIEW_ANGLE_DEG};
pub use imu::{synthesize_imu, ImuNoiseModel};
pub use scene::{desk_rig, gripper_markers, look_at, STORAGE_MARKER_POSITION};
pub use script::{gripper_orientation, min_jerk, PhaseKind, Script, Segment};

use crate::error::{Error, Result};
use crate::streams::{merge_streams, pose_json, to_events, write_jsonl, GroundTruthSample, ImuSample, MarkerDetection, MeasurementEvent, RigConfig, Trajectory, TrajectorySample, WidthSample};
use crate::{Pose, Vec3};

/// Phase durations in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseDurations {
    pub approach: f64,
    pub grasp_close: f64,
    pub twist: f64,
    pub retreat: f64,
    pub transfer: f64,
    pub release: f64,
    pub depart: f64,
}

impl Default for PhaseDurations {
    fn default() -> Self {
        Self {
            approach: 2.0,
            grasp_close: 0.6,
            twist: 0.8,
            retreat: 1.0,
            transfer: 2.0,
            release: 0.6,
            depart: 1.2,
        }
    }
}

impl PhaseDurations {
    pub fn cycle(&self) -> f64 {
        self.approach + self.grasp_close + self.twist + self.retreat + self.transfer + self.release + self.depart
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorRates {
    pub imu_hz: f64,
    pub detection_hz: f64,
    pub width_hz: f64,
}

impl Default for SensorRates {
    fn default() -> Self {
        Self {
            imu_hz: 200.0,
            detection_hz: 30.0,
            width_hz: 30.0,
        }
    }
}

/// Interval during which one camera produces no detections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Occlusion {
    pub camera_id: String,
    pub t_start: f64,
    pub t_end: f64,
}

/// Scenario description. Omitted fields take the values of [`ScenarioConfig::three_apples`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Apple centers in the world frame (m). The gripper origin reaches each one.
    pub apples: Vec<[f64; 3]>,
    pub apple_diameter: f64,
    pub open_width: f64,
    #[serde(with = "pose_json")]
    pub home: Pose,
    /// Gripper pose at which fruit is released over the storage box.
    #[serde(with = "pose_json")]
    pub storage_pose: Pose,
    pub durations: PhaseDurations,
    /// Stationary time before the first and after the last cycle (s).
    pub hold: f64,
    /// Detach rotation about the gripper forward axis (rad).
    pub twist_angle: f64,
    pub retreat_distance: f64,
    pub depart_height: f64,
    pub rates: SensorRates,
    pub seed: u64,
    pub occlusions: Vec<Occlusion>,
    pub dropout_probability: f64,
    /// Multiplies every sensor noise level; 0 gives noiseless streams.
    pub noise_scale: f64,
    pub initial_gyro_bias: [f64; 3],
    pub initial_accel_bias: [f64; 3],
    /// Width sensor noise standard deviation (m), before `noise_scale`.
    pub width_noise: f64,
    /// Length of the separate calibration recording (s); 0 skips it.
    pub calibration_duration: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::three_apples()
    }
}

impl ScenarioConfig {
    /// Three apples on a vertical plane in front of the home pose, storage low and to the side.
    pub fn three_apples() -> Self {
        let storage = Vec3::from(STORAGE_MARKER_POSITION);
        Self {
            apples: vec![[-0.2, 0.6, 1.1], [0.0, 0.6, 1.25], [0.2, 0.6, 1.0]],
            apple_diameter: 0.07,
            open_width: 0.10,
            home: Pose::new(gripper_orientation(&Vec3::y()), Vec3::new(0.0, 0.0, 1.0)),
            storage_pose: Pose::new(gripper_orientation(&-Vec3::z()), storage + Vec3::new(0.0, 0.0, 0.15)),
            durations: PhaseDurations::default(),
            hold: 1.0,
            twist_angle: 60f64.to_radians(),
            retreat_distance: 0.1,
            depart_height: 0.4,
            rates: SensorRates::default(),
            seed: 42,
            occlusions: Vec::new(),
            dropout_probability: 0.0,
            noise_scale: 1.0,
            initial_gyro_bias: [0.0; 3],
            initial_accel_bias: [0.0; 3],
            width_noise: 0.0005,
            calibration_duration: 30.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let d = &self.durations;
        for (name, v) in [
            ("approach", d.approach),
            ("grasp_close", d.grasp_close),
            ("twist", d.twist),
            ("retreat", d.retreat),
            ("transfer", d.transfer),
            ("release", d.release),
            ("depart", d.depart),
            ("imu_hz", self.rates.imu_hz),
            ("detection_hz", self.rates.detection_hz),
            ("width_hz", self.rates.width_hz),
            ("apple_diameter", self.apple_diameter),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("hold", self.hold),
            ("noise_scale", self.noise_scale),
            ("width_noise", self.width_noise),
            ("calibration_duration", self.calibration_duration),
            ("retreat_distance", self.retreat_distance),
            ("depart_height", self.depart_height),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(self.apple_diameter < self.open_width) {
            return bad("apple_diameter must be smaller than open_width".into());
        }
        if !(0.0..=1.0).contains(&self.dropout_probability) {
            return bad(format!("dropout_probability must be in [0, 1], got {}", self.dropout_probability));
        }
        if !(self.twist_angle.abs() < std::f64::consts::PI) {
            return bad("twist_angle must be within (-pi, pi)".into());
        }
        for (i, a) in self.apples.iter().enumerate() {
            if (Vec3::from(*a) - self.storage_pose.translation).norm() < 0.01 {
                return bad(format!("apple {i} coincides with the storage pose"));
            }
        }
        for o in &self.occlusions {
            if !(o.t_start <= o.t_end) {
                return bad(format!("occlusion for {} ends before it starts", o.camera_id));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Time window of the twist phase of every apple.
    pub fn twist_windows(&self) -> Result<Vec<(f64, f64)>> {
        let script = Script::new(self)?;
        Ok((0..self.apples.len())
            .filter_map(|i| script.phase(i, PhaseKind::Twist).map(|s| (s.t0, s.t1)))
            .collect())
    }
}

/// Scripted event times for one apple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueEvents {
    pub apple: usize,
    /// Gripper fully closed on the fruit.
    pub grasp: f64,
    /// Gripper fully open over the storage box.
    pub release: f64,
    /// On-board camera passes the leave distance from the storage marker.
    pub departure: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub trajectory: Trajectory,
    /// Noise-free width at the width sensor rate.
    pub width: Vec<WidthSample>,
    pub events: Vec<TrueEvents>,
}

/// Gripper trajectory sampled at the IMU rate, the true width signal and event times.
/// Departure uses the rig's storage marker, on-board camera and leave distance.
pub fn generate_ground_truth(sc: &ScenarioConfig, rig: &RigConfig) -> Result<GroundTruth> {
    let script = Script::new(sc)?;
    let duration = script.duration();
    let sampled = |rate: f64| -> Vec<f64> {
        let n = (duration * rate + 1e-9).floor() as usize;
        (0..=n).map(|k| k as f64 / rate).collect()
    };
    let trajectory = Trajectory::from_samples(
        sampled(sc.rates.imu_hz)
            .into_iter()
            .map(|t| TrajectorySample {
                t,
                pose: script.pose_at(t),
                cov_diag: None,
            })
            .collect(),
    )?;
    let width = sampled(sc.rates.width_hz)
        .into_iter()
        .map(|t| WidthSample { t, width: script.width_at(t) })
        .collect();

    let storage = rig.storage_marker().pose_wm.translation;
    let gc = rig.onboard_camera.pose_gc;
    let distance = |p: &Pose| (p.compose(&gc).translation - storage).norm();
    let events = (0..sc.apples.len())
        .map(|i| TrueEvents {
            apple: i,
            grasp: script.phase(i, PhaseKind::GraspClose).expect("scripted").t1,
            release: script.phase(i, PhaseKind::Release).expect("scripted").t1,
            departure: script.departure_time(i, rig.thresholds.leave_distance, distance),
        })
        .collect();
    Ok(GroundTruth { trajectory, width, events })
}

/// A complete synthetic demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDemo {
    pub scenario: ScenarioConfig,
    /// The rig the streams were generated with.
    pub rig: RigConfig,
    pub ground_truth: GroundTruth,
    pub imu: Vec<ImuSample>,
    pub detections: Vec<MarkerDetection>,
    pub width: Vec<WidthSample>,
    /// Separate recording for extrinsic calibration, tag sightings included.
    pub calibration_detections: Vec<MarkerDetection>,
}

#[derive(Serialize)]
struct TruthFile<'a> {
    seed: u64,
    duration: f64,
    events: &'a [TrueEvents],
    rig: &'a RigConfig,
}

/// File names written by [`write_demo`].
pub const DEMO_FILES: [&str; 6] = ["gt.jsonl", "imu.jsonl", "detections.jsonl", "width.jsonl", "calib_detections.jsonl", "truth.json"];

impl SyntheticDemo {
    /// Merged demonstration events: IMU (source 0), detections (1), width (2).
    pub fn events(&self) -> Vec<MeasurementEvent> {
        merge_streams(vec![
            to_events(0, self.imu.iter().cloned()),
            to_events(1, self.detections.iter().cloned()),
            to_events(2, self.width.iter().cloned()),
        ])
    }

    pub fn calibration_events(&self) -> Vec<MeasurementEvent> {
        to_events(0, self.calibration_detections.iter().cloned())
    }

    pub fn duration(&self) -> f64 {
        self.ground_truth.trajectory.time_range().map_or(0.0, |(_, t1)| t1)
    }

    /// Contents of every output file, in [`DEMO_FILES`] order.
    pub fn render(&self) -> Result<Vec<(&'static str, Vec<u8>)>> {
        fn lines<R: Serialize>(records: &[R]) -> Vec<u8> {
            let mut buf = Vec::new();
            write_jsonl(records, &mut buf).expect("writing to memory");
            buf
        }
        let gt: Vec<GroundTruthSample> = self.ground_truth.trajectory.to_ground_truth();
        let truth = TruthFile {
            seed: self.scenario.seed,
            duration: self.duration(),
            events: &self.ground_truth.events,
            rig: &self.rig,
        };
        let mut truth_json = serde_json::to_vec_pretty(&truth).map_err(|e| Error::InvalidInput(e.to_string()))?;
        truth_json.push(b'\n');
        Ok(vec![
            (DEMO_FILES[0], lines(&gt)),
            (DEMO_FILES[1], lines(&self.imu)),
            (DEMO_FILES[2], lines(&self.detections)),
            (DEMO_FILES[3], lines(&self.width)),
            (DEMO_FILES[4], lines(&self.calibration_detections)),
            (DEMO_FILES[5], truth_json),
        ])
    }
}

/// Runs the scenario with the given rig as the true scene.
pub fn simulate(sc: &ScenarioConfig, rig: &RigConfig) -> Result<SyntheticDemo> {
    sc.validate()?;
    rig.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let gt = generate_ground_truth(sc, rig)?;

    let model = ImuNoiseModel::from_params(
        &rig.noise,
        sc.noise_scale,
        Vec3::from(sc.initial_gyro_bias),
        Vec3::from(sc.initial_accel_bias),
    );
    let imu = synthesize_imu(&gt.trajectory, &model, &rig.gravity, &mut rng)?;
    let detections = synthesize_detections(&gt.trajectory, rig, sc, &mut rng);

    let sigma_w = sc.width_noise * sc.noise_scale;
    let width = gt
        .width
        .iter()
        .map(|w| {
            let n: f64 = rng.sample(StandardNormal);
            WidthSample {
                t: w.t,
                width: (w.width + sigma_w * n).clamp(0.0, sc.open_width),
            }
        })
        .collect();

    let calibration_detections = calibration_recording(sc, rig, &mut rng)?;
    Ok(SyntheticDemo {
        scenario: sc.clone(),
        rig: rig.clone(),
        ground_truth: gt,
        imu,
        detections,
        width,
        calibration_detections,
    })
}

/// Gripper waved in front of both cameras for `calibration_duration` seconds, sampled at
/// the detection rate, with each camera also seeing its own tag.
pub fn calibration_recording(sc: &ScenarioConfig, rig: &RigConfig, rng: &mut impl Rng) -> Result<Vec<MarkerDetection>> {
    if sc.calibration_duration <= 0.0 {
        return Ok(Vec::new());
    }
    let center = Vec3::new(0.0, 0.45, 1.05);
    let base = sc.home.rotation;
    let rate = sc.rates.detection_hz;
    let n = (sc.calibration_duration * rate).floor() as usize;
    let traj = Trajectory::from_samples(
        (0..=n)
            .map(|k| {
                let t = k as f64 / rate;
                TrajectorySample {
                    t,
                    pose: calibration_motion(&center, &base, t),
                    cov_diag: None,
                }
            })
            .collect(),
    )?;
    let settings = DetectionSettings {
        rate,
        noise_scale: sc.noise_scale,
        dropout_probability: 0.0,
        occlusions: Vec::new(),
        include_tags: true,
        include_onboard: false,
    };
    Ok(synthesize_detections_with(&traj, rig, &settings, rng))
}

/// Writes every stream plus `truth.json` into `dir`.
pub fn write_demo(demo: &SyntheticDemo, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, bytes) in demo.render()? {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

//! Timestamped sensor streams, their JSON Lines formats, and the static rig description.
//!
//! Every stream is one JSON object per line with explicit field names and
//! double-precision timestamps in seconds from demo start:
//!
//! ```text
//! imu.jsonl         {"t":0.005,"gyro":[gx,gy,gz],"accel":[ax,ay,az]}
//! detections.jsonl  {"t":0.033,"camera_id":"cam1","marker_id":"top","pose":{"q":[w,x,y,z],"t":[x,y,z]},"quality":0.1}
//! width.jsonl       {"t":0.033,"width":0.1}
//! gt.jsonl          {"t":0.005,"q":[w,x,y,z],"p":[x,y,z]}
//! traj.jsonl        gt.jsonl plus an optional "cov":[σ²px,σ²py,σ²pz,σ²rx,σ²ry,σ²rz]
//! ```
//!
//! Gyro is in rad/s, accel is specific force in m/s², both in the body frame.
//! Quaternions are written with `w >= 0`.

mod io;
mod merge;
mod rig;
mod trajectory;

pub use io::{parse_jsonl, parse_stream, read_jsonl, write_jsonl, write_jsonl_file, StreamRecord};
pub use merge::merge_streams;
pub use rig::{
    load_rig_config, CalibrationConfig, CameraConfig, GripperMarker, OnboardCamera, RigConfig,
    SceneMarker, DEFAULT_FOV_DEG, DEFAULT_GRAVITY,
};
pub use trajectory::{Trajectory, TrajectorySample};
pub(crate) use rig::pose_json;

use serde::{Deserialize, Serialize};

use crate::geom::Quat;
use crate::{Pose, Vec3};

/// Camera id reserved for detections made by the gripper's own camera.
pub const ONBOARD_CAMERA_ID: &str = "onboard";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "wire::Imu", try_from = "wire::Imu")]
pub struct ImuSample {
    pub t: f64,
    pub gyro: Vec3,
    pub accel: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "wire::Detection", try_from = "wire::Detection")]
pub struct MarkerDetection {
    pub t: f64,
    pub camera_id: String,
    pub marker_id: String,
    /// Marker pose in the camera frame.
    pub pose_cm: Pose,
    /// Non-negative reprojection-residual proxy; scales the measurement covariance.
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "wire::Width", try_from = "wire::Width")]
pub struct WidthSample {
    pub t: f64,
    /// Finger opening in meters.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "wire::Stamped", try_from = "wire::Stamped")]
pub struct GroundTruthSample {
    pub t: f64,
    /// Gripper pose in the world frame.
    pub pose_wg: Pose,
}

/// The stream types a file can hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Imu,
    Detections,
    Width,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    Imu(ImuSample),
    Detection(MarkerDetection),
    Width(WidthSample),
}

impl Measurement {
    pub fn t(&self) -> f64 {
        match self {
            Measurement::Imu(s) => s.t,
            Measurement::Detection(d) => d.t,
            Measurement::Width(w) => w.t,
        }
    }

    /// Tie-break rank for equal timestamps: IMU, then detections, then width.
    pub fn priority(&self) -> u8 {
        match self {
            Measurement::Imu(_) => 0,
            Measurement::Detection(_) => 1,
            Measurement::Width(_) => 2,
        }
    }
}

/// A measurement tagged with the index of the stream it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEvent {
    pub source: usize,
    pub measurement: Measurement,
}

impl MeasurementEvent {
    pub fn new(source: usize, measurement: Measurement) -> Self {
        Self {
            source,
            measurement,
        }
    }

    pub fn t(&self) -> f64 {
        self.measurement.t()
    }
}

impl From<ImuSample> for Measurement {
    fn from(s: ImuSample) -> Self {
        Measurement::Imu(s)
    }
}

impl From<MarkerDetection> for Measurement {
    fn from(d: MarkerDetection) -> Self {
        Measurement::Detection(d)
    }
}

impl From<WidthSample> for Measurement {
    fn from(w: WidthSample) -> Self {
        Measurement::Width(w)
    }
}

/// Wraps a single ordered stream as events with the given source index.
pub fn to_events<M: Into<Measurement>>(source: usize, items: impl IntoIterator<Item = M>) -> Vec<MeasurementEvent> {
    items
        .into_iter()
        .map(|m| MeasurementEvent::new(source, m.into()))
        .collect()
}

pub(crate) mod wire {
    //! On-disk shapes. Kept separate so the domain types can hold nalgebra values.

    use super::*;

    #[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct PoseJson {
        pub q: [f64; 4],
        pub t: [f64; 3],
    }

    impl From<Pose> for PoseJson {
        fn from(p: Pose) -> Self {
            PoseJson {
                q: p.rotation.canonical().to_array(),
                t: p.translation.into(),
            }
        }
    }

    impl TryFrom<PoseJson> for Pose {
        type Error = String;

        fn try_from(p: PoseJson) -> Result<Self, String> {
            Ok(Pose {
                rotation: quat(p.q)?,
                translation: vec3(p.t, "t")?,
            })
        }
    }

    pub fn quat(q: [f64; 4]) -> Result<Quat<f64>, String> {
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !n.is_finite() || n < 1e-6 {
            return Err(format!("quaternion {q:?} is not a valid rotation"));
        }
        // Already-normalized input is kept bit-for-bit so that files round trip exactly.
        if (n - 1.0).abs() <= 1e-12 {
            Ok(Quat::from_raw(q[0], q[1], q[2], q[3]))
        } else {
            Ok(Quat::from_array(q))
        }
    }

    pub fn vec3(v: [f64; 3], name: &str) -> Result<Vec3, String> {
        if v.iter().all(|c| c.is_finite()) {
            Ok(Vec3::from(v))
        } else {
            Err(format!("{name} has non-finite components"))
        }
    }

    pub fn finite(v: f64, name: &str) -> Result<f64, String> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{name} is not finite"))
        }
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Imu {
        t: f64,
        gyro: [f64; 3],
        accel: [f64; 3],
    }

    impl From<ImuSample> for Imu {
        fn from(s: ImuSample) -> Self {
            Imu {
                t: s.t,
                gyro: s.gyro.into(),
                accel: s.accel.into(),
            }
        }
    }

    impl TryFrom<Imu> for ImuSample {
        type Error = String;

        fn try_from(w: Imu) -> Result<Self, String> {
            Ok(ImuSample {
                t: finite(w.t, "t")?,
                gyro: vec3(w.gyro, "gyro")?,
                accel: vec3(w.accel, "accel")?,
            })
        }
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Detection {
        t: f64,
        camera_id: String,
        marker_id: String,
        pose: PoseJson,
        quality: f64,
    }

    impl From<MarkerDetection> for Detection {
        fn from(d: MarkerDetection) -> Self {
            Detection {
                t: d.t,
                camera_id: d.camera_id,
                marker_id: d.marker_id,
                pose: d.pose_cm.into(),
                quality: d.quality,
            }
        }
    }

    impl TryFrom<Detection> for MarkerDetection {
        type Error = String;

        fn try_from(w: Detection) -> Result<Self, String> {
            let quality = finite(w.quality, "quality")?;
            if quality < 0.0 {
                return Err(format!("quality {quality} is negative"));
            }
            let pose_cm: Pose = w.pose.try_into()?;
            if !(pose_cm.translation.z > 0.0) {
                return Err(format!("marker is not in front of the camera (z = {})", pose_cm.translation.z));
            }
            Ok(MarkerDetection {
                t: finite(w.t, "t")?,
                camera_id: w.camera_id,
                marker_id: w.marker_id,
                pose_cm,
                quality,
            })
        }
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Width {
        t: f64,
        width: f64,
    }

    impl From<WidthSample> for Width {
        fn from(w: WidthSample) -> Self {
            Width {
                t: w.t,
                width: w.width,
            }
        }
    }

    impl TryFrom<Width> for WidthSample {
        type Error = String;

        fn try_from(w: Width) -> Result<Self, String> {
            let width = finite(w.width, "width")?;
            if width < 0.0 {
                return Err(format!("width {width} is negative"));
            }
            Ok(WidthSample {
                t: finite(w.t, "t")?,
                width,
            })
        }
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Stamped {
        pub t: f64,
        pub q: [f64; 4],
        pub p: [f64; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub cov: Option<[f64; 6]>,
    }

    impl From<GroundTruthSample> for Stamped {
        fn from(s: GroundTruthSample) -> Self {
            Stamped {
                t: s.t,
                q: s.pose_wg.rotation.canonical().to_array(),
                p: s.pose_wg.translation.into(),
                cov: None,
            }
        }
    }

    impl TryFrom<Stamped> for GroundTruthSample {
        type Error = String;

        fn try_from(w: Stamped) -> Result<Self, String> {
            if w.cov.is_some() {
                return Err("unexpected field `cov` in ground truth".into());
            }
            Ok(GroundTruthSample {
                t: finite(w.t, "t")?,
                pose_wg: Pose {
                    rotation: quat(w.q)?,
                    translation: vec3(w.p, "p")?,
                },
            })
        }
    }
}

//! Static scene description loaded from a single JSON document.
//!
//! ```json
//! {
//!   "cameras": [
//!     {"camera_id": "cam1", "pose_wc": {"q": [1,0,0,0], "t": [0,0,2]},
//!      "tag_id": "tag1", "tag_pose_wt": {"q": [...], "t": [...]}, "fov_deg": 110}
//!   ],
//!   "gripper_markers": [{"marker_id": "top", "pose_gm": {"q": [...], "t": [...]}}],
//!   "scene_markers": [{"marker_id": "storage", "pose_wm": {"q": [...], "t": [...]}}],
//!   "storage_marker_id": "storage",
//!   "onboard_camera": {"pose_gc": {"q": [1,0,0,0], "t": [0,0,0]}, "fov_deg": 150},
//!   "gravity": [0, 0, -9.81],
//!   "fusion_window": 0.005,
//!   "thresholds": { ...segmenter settings... },
//!   "noise": { ...filter and detection noise... },
//!   "calibration": {"orientation_weight": 0.1, "pairing_window": 0.01}
//! }
//! ```
//!
//! Omitted optional fields take these defaults: `fov_deg` 110 (external) / 150 (on-board),
//! on-board camera at the gripper origin, gravity `(0, 0, -9.81)`, fusion window 5 ms,
//! calibration weight 0.1 m²/rad² and pairing window 10 ms. Segmenter and noise
//! defaults are documented on [`SegmenterConfig`] and [`NoiseParams`].

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::wire::PoseJson;
use super::ONBOARD_CAMERA_ID;
use crate::ekf::NoiseParams;
use crate::error::{Error, Result};
use crate::segment::SegmenterConfig;
use crate::{Pose, Vec3};

pub const DEFAULT_GRAVITY: [f64; 3] = [0.0, 0.0, -9.81];
pub const DEFAULT_FOV_DEG: f64 = 110.0;
const DEFAULT_ONBOARD_FOV_DEG: f64 = 150.0;
const DEFAULT_FUSION_WINDOW: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CameraConfig {
    pub camera_id: String,
    #[serde(with = "pose_json")]
    pub pose_wc: Pose,
    pub tag_id: String,
    #[serde(with = "pose_json")]
    pub tag_pose_wt: Pose,
    /// Full opening angle of the visibility cone.
    pub fov_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GripperMarker {
    pub marker_id: String,
    #[serde(with = "pose_json")]
    pub pose_gm: Pose,
}

/// A marker fixed in the world, such as the one next to the storage location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneMarker {
    pub marker_id: String,
    #[serde(with = "pose_json")]
    pub pose_wm: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnboardCamera {
    #[serde(with = "pose_json", default = "Pose::identity")]
    pub pose_gc: Pose,
    #[serde(default = "default_onboard_fov")]
    pub fov_deg: f64,
}

impl Default for OnboardCamera {
    fn default() -> Self {
        Self {
            pose_gc: Pose::identity(),
            fov_deg: DEFAULT_ONBOARD_FOV_DEG,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    /// Weight λ (m²/rad²) of squared orientation disagreement against squared position disagreement.
    pub orientation_weight: f64,
    /// Maximum time offset (s) between two cameras' estimates paired into one epoch.
    pub pairing_window: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            orientation_weight: 0.1,
            pairing_window: 0.010,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRig")]
pub struct RigConfig {
    pub cameras: Vec<CameraConfig>,
    pub gripper_markers: Vec<GripperMarker>,
    pub scene_markers: Vec<SceneMarker>,
    pub storage_marker_id: String,
    pub onboard_camera: OnboardCamera,
    #[serde(serialize_with = "vec3_json::serialize")]
    pub gravity: Vec3,
    /// Observations closer in time than this are fused into one epoch (s).
    pub fusion_window: f64,
    pub thresholds: SegmenterConfig,
    pub noise: NoiseParams,
    pub calibration: CalibrationConfig,
}

impl RigConfig {
    pub fn camera(&self, camera_id: &str) -> Option<&CameraConfig> {
        self.cameras.iter().find(|c| c.camera_id == camera_id)
    }

    pub fn camera_mut(&mut self, camera_id: &str) -> Option<&mut CameraConfig> {
        self.cameras.iter_mut().find(|c| c.camera_id == camera_id)
    }

    pub fn gripper_marker(&self, marker_id: &str) -> Option<&GripperMarker> {
        self.gripper_markers.iter().find(|m| m.marker_id == marker_id)
    }

    pub fn scene_marker(&self, marker_id: &str) -> Option<&SceneMarker> {
        self.scene_markers.iter().find(|m| m.marker_id == marker_id)
    }

    pub fn storage_marker(&self) -> &SceneMarker {
        self.scene_marker(&self.storage_marker_id)
            .expect("validated: storage marker is a scene marker")
    }

    /// Checks every cross-field invariant. Deserialization runs this automatically.
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.cameras.is_empty() {
            return cfg("at least one external camera is required".into());
        }
        let mut camera_ids = HashSet::new();
        for c in &self.cameras {
            if c.camera_id == ONBOARD_CAMERA_ID {
                return cfg(format!("camera id {ONBOARD_CAMERA_ID:?} is reserved for the on-board camera"));
            }
            if !camera_ids.insert(c.camera_id.as_str()) {
                return cfg(format!("duplicate camera_id {:?}", c.camera_id));
            }
            check_fov(c.fov_deg, &c.camera_id)?;
        }
        check_fov(self.onboard_camera.fov_deg, ONBOARD_CAMERA_ID)?;

        let mut marker_ids = HashSet::new();
        let all_ids = self
            .gripper_markers
            .iter()
            .map(|m| &m.marker_id)
            .chain(self.scene_markers.iter().map(|m| &m.marker_id))
            .chain(self.cameras.iter().map(|c| &c.tag_id));
        for id in all_ids {
            if !marker_ids.insert(id.as_str()) {
                return cfg(format!("duplicate marker_id {id:?}"));
            }
        }
        if self.gripper_markers.is_empty() {
            return cfg("at least one gripper marker is required".into());
        }
        if self.scene_marker(&self.storage_marker_id).is_none() {
            return cfg(format!(
                "unknown storage_marker_id {:?} (must be listed in scene_markers)",
                self.storage_marker_id
            ));
        }

        let g = self.gravity.norm();
        if !(9.7..=9.9).contains(&g) {
            return cfg(format!("gravity magnitude {g} outside [9.7, 9.9] m/s²"));
        }
        if !(self.fusion_window > 0.0) {
            return cfg("fusion_window must be positive".into());
        }
        if !(self.calibration.orientation_weight >= 0.0) {
            return cfg("calibration.orientation_weight must be non-negative".into());
        }
        if !(self.calibration.pairing_window > 0.0) {
            return cfg("calibration.pairing_window must be positive".into());
        }
        self.thresholds.validate()?;
        self.noise.validate()?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("rig config serializes")
    }
}

fn check_fov(fov: f64, id: &str) -> Result<()> {
    if fov > 0.0 && fov <= 180.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("fov_deg of {id:?} must be in (0, 180]")))
    }
}

fn default_onboard_fov() -> f64 {
    DEFAULT_ONBOARD_FOV_DEG
}

pub fn load_rig_config(path: impl AsRef<Path>) -> Result<RigConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RigConfig::from_json(&text)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCamera {
    camera_id: String,
    pose_wc: Option<PoseJson>,
    tag_id: String,
    tag_pose_wt: PoseJson,
    #[serde(default)]
    fov_deg: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRig {
    cameras: Vec<RawCamera>,
    gripper_markers: Vec<GripperMarker>,
    #[serde(default)]
    scene_markers: Vec<SceneMarker>,
    storage_marker_id: String,
    #[serde(default)]
    onboard_camera: OnboardCamera,
    #[serde(default)]
    gravity: Option<[f64; 3]>,
    #[serde(default)]
    fusion_window: Option<f64>,
    #[serde(default)]
    thresholds: SegmenterConfig,
    #[serde(default)]
    noise: NoiseParams,
    #[serde(default)]
    calibration: CalibrationConfig,
}

impl TryFrom<RawRig> for RigConfig {
    type Error = Error;

    fn try_from(raw: RawRig) -> Result<Self> {
        let mut cameras = Vec::with_capacity(raw.cameras.len());
        for c in raw.cameras {
            let pose_wc = c
                .pose_wc
                .ok_or_else(|| Error::Config(format!("missing camera extrinsics (pose_wc) for {:?}", c.camera_id)))?;
            cameras.push(CameraConfig {
                pose_wc: pose_wc.try_into().map_err(Error::Config)?,
                tag_pose_wt: c.tag_pose_wt.try_into().map_err(Error::Config)?,
                camera_id: c.camera_id,
                tag_id: c.tag_id,
                fov_deg: c.fov_deg.unwrap_or(DEFAULT_FOV_DEG),
            });
        }
        let rig = RigConfig {
            cameras,
            gripper_markers: raw.gripper_markers,
            scene_markers: raw.scene_markers,
            storage_marker_id: raw.storage_marker_id,
            onboard_camera: raw.onboard_camera,
            gravity: Vec3::from(raw.gravity.unwrap_or(DEFAULT_GRAVITY)),
            fusion_window: raw.fusion_window.unwrap_or(DEFAULT_FUSION_WINDOW),
            thresholds: raw.thresholds,
            noise: raw.noise,
            calibration: raw.calibration,
        };
        rig.validate()?;
        Ok(rig)
    }
}

pub(crate) mod pose_json {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(pose: &Pose, s: S) -> std::result::Result<S::Ok, S::Error> {
        PoseJson::from(*pose).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Pose, D::Error> {
        PoseJson::deserialize(d)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}

pub(crate) mod vec3_json {
    use super::*;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &Vec3, s: S) -> std::result::Result<S::Ok, S::Error> {
        <[f64; 3]>::from(*v).serialize(s)
    }
}

//! Marker detections from the external cameras and the on-board camera.
//!
//! Visibility is purely geometric: a marker is seen when its face normal is within
//! [`MAX_VIEW_ANGLE_DEG`] of the direction to the camera and its center lies inside the
//! camera's cone. Detection noise grows with the viewing angle through the quality value
//! `1 − cos(view angle)`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::geom::exp_so3;
use crate::Quat;
use crate::streams::{MarkerDetection, RigConfig, Trajectory, ONBOARD_CAMERA_ID};
use crate::{Pose, Vec3};

use super::{Occlusion, ScenarioConfig};

pub const MAX_VIEW_ANGLE_DEG: f64 = 70.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSettings {
    pub rate: f64,
    pub noise_scale: f64,
    pub dropout_probability: f64,
    pub occlusions: Vec<Occlusion>,
    /// Also emit each external camera's sightings of its own tag.
    pub include_tags: bool,
    pub include_onboard: bool,
}

impl DetectionSettings {
    pub fn from_scenario(sc: &ScenarioConfig) -> Self {
        Self {
            rate: sc.rates.detection_hz,
            noise_scale: sc.noise_scale,
            dropout_probability: sc.dropout_probability,
            occlusions: sc.occlusions.clone(),
            include_tags: false,
            include_onboard: true,
        }
    }
}

/// Quality value of a marker seen by a camera, or `None` when it is not visible.
pub fn visibility(pose_w_cam: &Pose, fov_deg: f64, pose_wm: &Pose) -> Option<f64> {
    let normal = pose_wm.rotation.rotate(&Vec3::z());
    let to_camera = pose_w_cam.translation - pose_wm.translation;
    let dist = to_camera.norm();
    if dist < 1e-9 {
        return None;
    }
    let cos_view = normal.dot(&to_camera) / dist;
    if cos_view < MAX_VIEW_ANGLE_DEG.to_radians().cos() {
        return None;
    }
    let axis = pose_w_cam.rotation.rotate(&Vec3::z());
    let cos_axis = axis.dot(&(-to_camera)) / dist;
    if cos_axis < (0.5 * fov_deg).to_radians().cos() {
        return None;
    }
    Some(1.0 - cos_view)
}

fn gaussian3(rng: &mut impl Rng) -> Vec3 {
    let mut draw = || -> f64 { rng.sample(StandardNormal) };
    Vec3::new(draw(), draw(), draw())
}

struct Emitter<'a, R: Rng> {
    settings: &'a DetectionSettings,
    sigma_t: f64,
    sigma_r: f64,
    rng: &'a mut R,
    out: Vec<MarkerDetection>,
}

impl<R: Rng> Emitter<'_, R> {
    fn emit(&mut self, t: f64, camera_id: &str, fov_deg: f64, pose_w_cam: &Pose, marker_id: &str, pose_wm: &Pose) {
        let Some(quality) = visibility(pose_w_cam, fov_deg, pose_wm) else {
            return;
        };
        let exact = pose_w_cam.inverse().compose(pose_wm);
        let inflate = (1.0 + quality).sqrt();
        let dt = gaussian3(self.rng) * (self.sigma_t * inflate);
        let dr = gaussian3(self.rng) * (self.sigma_r * inflate);
        let dropped = self.rng.random::<f64>() < self.settings.dropout_probability;
        let occluded = self
            .settings
            .occlusions
            .iter()
            .any(|o| o.camera_id == camera_id && t >= o.t_start && t <= o.t_end);
        if dropped || occluded {
            return;
        }
        let pose_cm = Pose {
            rotation: (exp_so3(&dr) * exact.rotation).normalize(),
            translation: exact.translation + dt,
        };
        self.out.push(MarkerDetection {
            t,
            camera_id: camera_id.to_string(),
            marker_id: marker_id.to_string(),
            pose_cm,
            quality,
        });
    }
}

/// Detections at a fixed epoch rate over the span of `gt`, using `sc`'s rates, noise
/// scale, dropouts and occlusions.
pub fn synthesize_detections(gt: &Trajectory, rig: &RigConfig, sc: &ScenarioConfig, rng: &mut impl Rng) -> Vec<MarkerDetection> {
    synthesize_detections_with(gt, rig, &DetectionSettings::from_scenario(sc), rng)
}

pub fn synthesize_detections_with(gt: &Trajectory, rig: &RigConfig, settings: &DetectionSettings, rng: &mut impl Rng) -> Vec<MarkerDetection> {
    let Some((t0, t1)) = gt.time_range() else {
        return Vec::new();
    };
    let mut em = Emitter {
        settings,
        sigma_t: rig.noise.marker_sigma_translation * settings.noise_scale,
        sigma_r: rig.noise.marker_sigma_rotation * settings.noise_scale,
        rng,
        out: Vec::new(),
    };
    let storage = rig.storage_marker();
    let epochs = ((t1 - t0) * settings.rate + 1e-9).floor() as usize;
    for j in 0..=epochs {
        // the last epoch may land a rounding step past the end of the trajectory
        let t = (t0 + j as f64 / settings.rate).min(t1);
        let pose_wg = gt.interpolate(t).expect("epoch inside trajectory");
        for cam in &rig.cameras {
            for m in &rig.gripper_markers {
                em.emit(t, &cam.camera_id, cam.fov_deg, &cam.pose_wc, &m.marker_id, &pose_wg.compose(&m.pose_gm));
            }
            if settings.include_tags {
                em.emit(t, &cam.camera_id, cam.fov_deg, &cam.pose_wc, &cam.tag_id, &cam.tag_pose_wt);
            }
        }
        if settings.include_onboard {
            let onboard = pose_wg.compose(&rig.onboard_camera.pose_gc);
            em.emit(t, ONBOARD_CAMERA_ID, rig.onboard_camera.fov_deg, &onboard, &storage.marker_id, &storage.pose_wm);
        }
    }
    em.out
}

/// Gripper motion for the calibration recording: a slow wobble around `center`
/// that keeps markers in view of cameras above and below.
pub fn calibration_motion(center: &Vec3, base: &Quat, t: f64) -> Pose {
    use std::f64::consts::TAU;
    let offset = Vec3::new(
        0.12 * (TAU * 0.13 * t).sin(),
        0.08 * (TAU * 0.07 * t + 1.0).sin(),
        0.10 * (TAU * 0.11 * t + 2.0).sin(),
    );
    let wobble = Vec3::new(
        0.5 * (TAU * 0.05 * t).sin(),
        0.4 * (TAU * 0.09 * t + 0.5).sin(),
        0.6 * (TAU * 0.06 * t + 1.0).sin(),
    );
    Pose {
        rotation: *base * exp_so3(&wobble),
        translation: center + offset,
    }
}

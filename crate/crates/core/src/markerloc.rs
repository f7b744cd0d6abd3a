//! Gripper pose observations from external-camera marker detections.
//!
//! Each detection of a gripper marker yields a full gripper pose through the chain
//! `pose_wg = pose_wc ∘ pose_cm ∘ inverse(pose_gm)`. Detections that land within the
//! rig's fusion window are merged into a single observation.

use nalgebra::{Matrix3, SMatrix, Vector3};

use crate::ekf::NoiseParams;
use crate::error::{Error, Result};
use crate::geom::{Pose, Quat};
use crate::scalar::Real;
use crate::streams::{MarkerDetection, Measurement, MeasurementEvent, RigConfig, ONBOARD_CAMERA_ID};

pub type Matrix6<T> = SMatrix<T, 6, 6>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ObservationSource {
    pub camera_id: String,
    pub marker_id: String,
}

/// World-frame gripper pose measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseObservation<T: Real> {
    pub t: f64,
    pub pose_wg: Pose<T>,
    /// Covariance ordered translation xyz, then rotation xyz (world-frame angle error).
    pub cov: Matrix6<T>,
    pub source: Vec<ObservationSource>,
}

impl<T: Real> PoseObservation<T> {
    pub fn cast<U: Real>(&self) -> PoseObservation<U> {
        PoseObservation {
            t: self.t,
            pose_wg: self.pose_wg.cast(),
            cov: self.cov.map(|v| U::lit(v.to_f64_lossy())),
            source: self.source.clone(),
        }
    }

    pub fn translation_cov(&self) -> Matrix3<T> {
        self.cov.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn rotation_cov(&self) -> Matrix3<T> {
        self.cov.fixed_view::<3, 3>(3, 3).into_owned()
    }
}

/// Diagonal per-detection covariance, inflated by `(1 + quality)`.
pub fn detection_covariance(noise: &NoiseParams, quality: f64) -> Matrix6<f64> {
    let scale = 1.0 + quality.max(0.0);
    let st = noise.marker_sigma_translation.powi(2) * scale;
    let sr = noise.marker_sigma_rotation.powi(2) * scale;
    Matrix6::from_diagonal(&SMatrix::<f64, 6, 1>::from([st, st, st, sr, sr, sr]))
}

/// Gripper pose in the detecting camera's frame: `pose_cm ∘ inverse(pose_gm)`.
pub fn gripper_pose_in_camera(det: &MarkerDetection, rig: &RigConfig) -> Result<Pose<f64>> {
    let marker = rig
        .gripper_marker(&det.marker_id)
        .ok_or_else(|| Error::UnknownMarker(det.marker_id.clone()))?;
    Ok(det.pose_cm.compose(&marker.pose_gm.inverse()))
}

pub fn gripper_pose_from_detection(det: &MarkerDetection, rig: &RigConfig) -> Result<PoseObservation<f64>> {
    let camera = rig
        .camera(&det.camera_id)
        .ok_or_else(|| Error::UnknownCamera(det.camera_id.clone()))?;
    let pose_cg = gripper_pose_in_camera(det, rig)?;
    Ok(PoseObservation {
        t: det.t,
        pose_wg: camera.pose_wc.compose(&pose_cg),
        cov: detection_covariance(&rig.noise, det.quality),
        source: vec![ObservationSource {
            camera_id: det.camera_id.clone(),
            marker_id: det.marker_id.clone(),
        }],
    })
}

/// Merges observations of the same instant.
///
/// Translation is the information-weighted mean; rotation is the sign-aligned
/// quaternion mean weighted by the inverse trace of each rotation block. The fused
/// covariance is block diagonal with each block the inverse of the summed inverses.
pub fn fuse_simultaneous<T: Real>(obs: &[PoseObservation<T>]) -> Result<PoseObservation<T>> {
    match obs {
        [] => return Err(Error::InvalidInput("no observations to fuse".into())),
        [single] => return Ok(single.clone()),
        _ => {}
    }

    let trans_info: Option<Vec<Matrix3<T>>> = obs.iter().map(|o| o.translation_cov().try_inverse()).collect();
    let rot_info: Option<Vec<Matrix3<T>>> = obs.iter().map(|o| o.rotation_cov().try_inverse()).collect();

    let n = T::lit(obs.len() as f64);
    let (translation, trans_cov) = match trans_info.and_then(|info| {
        let total: Matrix3<T> = info.iter().fold(Matrix3::zeros(), |acc, i| acc + i);
        let cov = total.try_inverse()?;
        let weighted = info
            .iter()
            .zip(obs)
            .fold(Vector3::zeros(), |acc, (i, o)| acc + i * o.pose_wg.translation);
        Some((cov * weighted, cov))
    }) {
        Some(v) => v,
        // Degenerate (zero) covariances: plain average.
        None => (
            obs.iter().fold(Vector3::zeros(), |acc, o| acc + o.pose_wg.translation) / n,
            obs.iter().fold(Matrix3::zeros(), |acc, o| acc + o.translation_cov()) / (n * n),
        ),
    };

    let rot_weights: Vec<T> = obs
        .iter()
        .map(|o| {
            let tr = o.rotation_cov().trace();
            if tr > T::zero() {
                T::one() / tr
            } else {
                T::one()
            }
        })
        .collect();
    let rotation = weighted_quaternion_mean(obs.iter().map(|o| o.pose_wg.rotation).zip(rot_weights.iter().copied()));
    let rot_cov = rot_info
        .and_then(|info| info.iter().fold(Matrix3::zeros(), |acc, i| acc + i).try_inverse())
        .unwrap_or_else(|| obs.iter().fold(Matrix3::zeros(), |acc, o| acc + o.rotation_cov()) / (n * n));

    let mut cov = Matrix6::zeros();
    cov.fixed_view_mut::<3, 3>(0, 0).copy_from(&symmetrize3(trans_cov));
    cov.fixed_view_mut::<3, 3>(3, 3).copy_from(&symmetrize3(rot_cov));

    let time_weights: Vec<f64> = obs
        .iter()
        .map(|o| {
            let tr = o.cov.trace().to_f64_lossy();
            if tr > 0.0 {
                1.0 / tr
            } else {
                1.0
            }
        })
        .collect();
    let wsum: f64 = time_weights.iter().sum();
    let t_min = obs.iter().map(|o| o.t).fold(f64::INFINITY, f64::min);
    let t_max = obs.iter().map(|o| o.t).fold(f64::NEG_INFINITY, f64::max);
    // rounding in the weighted mean can step outside the group's span
    let t = (obs.iter().zip(&time_weights).map(|(o, w)| o.t * w).sum::<f64>() / wsum).clamp(t_min, t_max);

    let mut source: Vec<ObservationSource> = obs.iter().flat_map(|o| o.source.iter().cloned()).collect();
    source.sort();
    source.dedup();

    Ok(PoseObservation {
        t,
        pose_wg: Pose {
            rotation,
            translation,
        },
        cov,
        source,
    })
}

/// Chordal L2 mean of rotations: align each sign with the first, accumulate, normalize.
pub fn weighted_quaternion_mean<T: Real>(items: impl IntoIterator<Item = (Quat<T>, T)>) -> Quat<T> {
    let mut iter = items.into_iter();
    let Some((first, w0)) = iter.next() else {
        return Quat::identity();
    };
    let mut acc = [first.w * w0, first.x * w0, first.y * w0, first.z * w0];
    for (q, w) in iter {
        let q = if q.dot(&first) < T::zero() { -q } else { q };
        acc[0] += q.w * w;
        acc[1] += q.x * w;
        acc[2] += q.y * w;
        acc[3] += q.z * w;
    }
    Quat::new(acc[0], acc[1], acc[2], acc[3])
}

fn symmetrize3<T: Real>(m: Matrix3<T>) -> Matrix3<T> {
    (m + m.transpose()) * T::lit(0.5)
}

/// Groups time-ordered observations into epochs: an epoch collects every observation
/// within `window` seconds of its first member.
pub fn group_by_window<T: Real>(obs: Vec<PoseObservation<T>>, window: f64) -> Vec<Vec<PoseObservation<T>>> {
    let mut groups: Vec<Vec<PoseObservation<T>>> = Vec::new();
    for o in obs {
        match groups.last_mut() {
            Some(g) if o.t - g[0].t <= window => g.push(o),
            _ => groups.push(vec![o]),
        }
    }
    groups
}

/// Whether a detection is an external-camera sighting of a gripper marker.
pub fn is_gripper_detection(det: &MarkerDetection, rig: &RigConfig) -> bool {
    det.camera_id != ONBOARD_CAMERA_ID && rig.camera(&det.camera_id).is_some() && rig.gripper_marker(&det.marker_id).is_some()
}

/// All gripper observations in an event stream, fused per epoch, in time order.
///
/// Detections of tags, scene markers, or the on-board camera are ignored; detections
/// from cameras or markers the rig does not know are skipped with a warning.
pub fn epoch_observations(events: &[MeasurementEvent], rig: &RigConfig) -> Vec<PoseObservation<f64>> {
    let mut obs = Vec::new();
    for e in events {
        let Measurement::Detection(det) = &e.measurement else {
            continue;
        };
        if is_gripper_detection(det, rig) {
            obs.push(gripper_pose_from_detection(det, rig).expect("ids checked"));
        } else if det.camera_id != ONBOARD_CAMERA_ID
            && rig.scene_marker(&det.marker_id).is_none()
            && !rig.cameras.iter().any(|c| c.tag_id == det.marker_id)
        {
            log::warn!("skipping detection of unknown marker {:?} by {:?} at t = {}", det.marker_id, det.camera_id, det.t);
        }
    }
    group_by_window(obs, rig.fusion_window)
        .iter()
        .map(|g| fuse_simultaneous(g).expect("groups are non-empty"))
        .collect()
}

/// Distance from the on-board camera to the storage marker.
pub fn storage_marker_distance(det: &MarkerDetection, storage_marker_id: &str) -> Result<f64> {
    if det.marker_id != storage_marker_id {
        return Err(Error::UnknownMarker(format!(
            "{} (expected storage marker {storage_marker_id})",
            det.marker_id
        )));
    }
    Ok(det.pose_cm.translation.norm())
}

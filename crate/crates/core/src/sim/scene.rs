//! Default desk-scale rig: one camera above the work area looking down, one low on the
//! opposite side looking up, a storage marker low and to the side.

use nalgebra::Matrix3;

use crate::ekf::NoiseParams;
use crate::Quat;
use crate::segment::SegmenterConfig;
use crate::streams::{CalibrationConfig, CameraConfig, GripperMarker, OnboardCamera, RigConfig, SceneMarker, DEFAULT_FOV_DEG, DEFAULT_GRAVITY};
use crate::{Pose, Vec3};

/// Camera pose at `eye` with optical axis (+z) toward `target` and image +y pointing
/// as close to world down as possible.
pub fn look_at(eye: &Vec3, target: &Vec3) -> Pose {
    let z = (target - eye).normalize();
    let down = Vec3::new(0.0, 0.0, -1.0);
    let x = if down.cross(&z).norm() < 1e-9 {
        Vec3::x()
    } else {
        down.cross(&z).normalize()
    };
    let y = z.cross(&x);
    Pose::new(Quat::from_rotation_matrix(&Matrix3::from_columns(&[x, y, z])), *eye)
}

/// Marker frame at `at` (gripper frame) whose face normal (+z) is `normal`.
fn marker_facing(normal: Vec3, at: Vec3) -> Pose {
    let z = normal.normalize();
    let helper = if z.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let y = z.cross(&helper).normalize();
    let x = y.cross(&z);
    Pose::new(Quat::from_rotation_matrix(&Matrix3::from_columns(&[x, y, z])), at)
}

/// Tag mounted in front of a camera, facing it.
fn tag_for(camera: &Pose) -> Pose {
    let in_camera = Pose::new(Quat::from_axis_angle(&Vec3::x(), std::f64::consts::PI), Vec3::new(0.15, 0.2, 0.5));
    camera.compose(&in_camera)
}

const MARKER_OFFSET: f64 = 0.04;

/// Gripper frame: +z forward, +y down, +x right. Markers sit on the top, bottom,
/// both sides and back of the gripper body.
pub fn gripper_markers() -> Vec<GripperMarker> {
    let o = MARKER_OFFSET;
    [
        ("top", Vec3::new(0.0, -1.0, 0.0)),
        ("bottom", Vec3::new(0.0, 1.0, 0.0)),
        ("left", Vec3::new(-1.0, 0.0, 0.0)),
        ("right", Vec3::new(1.0, 0.0, 0.0)),
        ("back", Vec3::new(0.0, 0.0, -1.0)),
    ]
    .into_iter()
    .map(|(id, n)| GripperMarker {
        marker_id: id.to_string(),
        pose_gm: marker_facing(n, n * o),
    })
    .collect()
}

pub const STORAGE_MARKER_POSITION: [f64; 3] = [0.45, 0.2, 0.55];

/// The rig used by the bundled scenario.
pub fn desk_rig() -> RigConfig {
    let cam1 = look_at(&Vec3::new(0.0, 0.1, 1.9), &Vec3::new(0.0, 0.4, 1.0));
    let cam2 = look_at(&Vec3::new(-0.3, 0.0, 0.2), &Vec3::new(0.0, 0.4, 1.0));
    // canonical signs so the rig survives a JSON round trip unchanged
    let canonical = |p: Pose| Pose::new(p.rotation.canonical(), p.translation);
    let camera = |id: &str, tag: &str, pose_wc: Pose| CameraConfig {
        camera_id: id.into(),
        pose_wc: canonical(pose_wc),
        tag_id: tag.into(),
        tag_pose_wt: canonical(tag_for(&pose_wc)),
        fov_deg: DEFAULT_FOV_DEG,
    };
    RigConfig {
        cameras: vec![camera("cam1", "tag1", cam1), camera("cam2", "tag2", cam2)],
        gripper_markers: gripper_markers(),
        scene_markers: vec![SceneMarker {
            marker_id: "storage".into(),
            pose_wm: Pose::from_translation(Vec3::from(STORAGE_MARKER_POSITION)),
        }],
        storage_marker_id: "storage".into(),
        onboard_camera: OnboardCamera {
            pose_gc: Pose::identity(),
            fov_deg: 150.0,
        },
        gravity: Vec3::from(DEFAULT_GRAVITY),
        fusion_window: 0.005,
        thresholds: SegmenterConfig::default(),
        noise: NoiseParams::default(),
        calibration: CalibrationConfig::default(),
    }
}

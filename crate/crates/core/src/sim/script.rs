//! Analytic gripper motion and width for a scripted harvesting demonstration.

use crate::error::Result;
use crate::Quat;
use crate::{Pose, Vec3};

use super::ScenarioConfig;

/// Motion phases of one harvesting cycle, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseKind {
    Hold,
    Approach,
    GraspClose,
    Twist,
    Retreat,
    Transfer,
    Release,
    Depart,
}

/// One piece of the script: pose and width move from `from` to `to` along a
/// minimum-jerk time profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub kind: PhaseKind,
    /// Index of the apple this segment belongs to; `None` for holds.
    pub apple: Option<usize>,
    pub t0: f64,
    pub t1: f64,
    pub from: Pose,
    pub to: Pose,
    pub width_from: f64,
    pub width_to: f64,
}

/// Quintic minimum-jerk profile on [0, 1]: zero velocity and acceleration at both ends.
pub fn min_jerk(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

impl Segment {
    fn progress(&self, t: f64) -> f64 {
        if self.t1 <= self.t0 {
            1.0
        } else {
            min_jerk((t - self.t0) / (self.t1 - self.t0))
        }
    }

    pub fn pose_at(&self, t: f64) -> Pose {
        let s = self.progress(t);
        Pose {
            rotation: self.from.rotation.slerp(&self.to.rotation, s),
            translation: self.from.translation + (self.to.translation - self.from.translation) * s,
        }
    }

    pub fn width_at(&self, t: f64) -> f64 {
        self.width_from + (self.width_to - self.width_from) * self.progress(t)
    }
}

/// The full scripted demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub segments: Vec<Segment>,
}

/// Orientation with gripper forward (+z) along `forward`, gripper +y as close to world
/// down as possible. Looking straight down, +x stays along world +x.
pub fn gripper_orientation(forward: &Vec3) -> Quat {
    let z = forward.normalize();
    let down = Vec3::new(0.0, 0.0, -1.0);
    let x = if down.cross(&z).norm() < 1e-9 {
        Vec3::x()
    } else {
        down.cross(&z).normalize()
    };
    let y = z.cross(&x);
    Quat::from_rotation_matrix(&nalgebra::Matrix3::from_columns(&[x, y, z]))
}

impl Script {
    pub fn new(sc: &ScenarioConfig) -> Result<Self> {
        sc.validate()?;
        let d = &sc.durations;
        let open = sc.open_width;
        let closed = sc.apple_diameter;
        let mut segments = Vec::new();
        let mut t = 0.0;
        let mut pose = sc.home;

        let mut push = |kind, apple, dur: f64, to: Pose, w: (f64, f64), pose: &mut Pose, t: &mut f64| {
            segments.push(Segment {
                kind,
                apple,
                t0: *t,
                t1: *t + dur,
                from: *pose,
                to,
                width_from: w.0,
                width_to: w.1,
            });
            *t += dur;
            *pose = to;
        };

        push(PhaseKind::Hold, None, sc.hold, pose, (open, open), &mut pose, &mut t);
        let release = sc.storage_pose;
        let forward = sc.home.rotation.rotate(&Vec3::z());
        for (i, apple) in sc.apples.iter().enumerate() {
            let apple = Vec3::from(*apple);
            let grasp = Pose {
                rotation: sc.home.rotation,
                translation: apple,
            };
            let twisted = grasp.compose(&Pose::from_rotation(Quat::from_axis_angle(&Vec3::z(), sc.twist_angle)));
            let retreated = Pose {
                rotation: twisted.rotation,
                translation: apple - forward * sc.retreat_distance,
            };
            let departed = Pose {
                rotation: release.rotation,
                translation: release.translation + Vec3::new(0.0, 0.0, sc.depart_height),
            };
            let a = Some(i);
            push(PhaseKind::Approach, a, d.approach, grasp, (open, open), &mut pose, &mut t);
            push(PhaseKind::GraspClose, a, d.grasp_close, grasp, (open, closed), &mut pose, &mut t);
            push(PhaseKind::Twist, a, d.twist, twisted, (closed, closed), &mut pose, &mut t);
            push(PhaseKind::Retreat, a, d.retreat, retreated, (closed, closed), &mut pose, &mut t);
            push(PhaseKind::Transfer, a, d.transfer, release, (closed, closed), &mut pose, &mut t);
            push(PhaseKind::Release, a, d.release, release, (closed, open), &mut pose, &mut t);
            push(PhaseKind::Depart, a, d.depart, departed, (open, open), &mut pose, &mut t);
        }
        push(PhaseKind::Hold, None, sc.hold, pose, (open, open), &mut pose, &mut t);
        Ok(Self { segments })
    }

    pub fn duration(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t1)
    }

    fn segment_at(&self, t: f64) -> &Segment {
        let i = self.segments.partition_point(|s| s.t1 <= t);
        &self.segments[i.min(self.segments.len() - 1)]
    }

    pub fn pose_at(&self, t: f64) -> Pose {
        self.segment_at(t).pose_at(t)
    }

    pub fn width_at(&self, t: f64) -> f64 {
        self.segment_at(t).width_at(t)
    }

    pub fn phase(&self, apple: usize, kind: PhaseKind) -> Option<&Segment> {
        self.segments.iter().find(|s| s.apple == Some(apple) && s.kind == kind)
    }

    /// First time in the depart phase of `apple` at which `distance(t)` exceeds
    /// `threshold`, by bisection. The distance grows monotonically while departing.
    pub fn departure_time(&self, apple: usize, threshold: f64, distance: impl Fn(&Pose) -> f64) -> Option<f64> {
        let seg = self.phase(apple, PhaseKind::Depart)?;
        if distance(&seg.pose_at(seg.t1)) <= threshold {
            return None;
        }
        if distance(&seg.pose_at(seg.t0)) > threshold {
            return Some(seg.t0);
        }
        let (mut lo, mut hi) = (seg.t0, seg.t1);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if distance(&seg.pose_at(mid)) > threshold {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn min_jerk_endpoints() {
        assert_eq!(min_jerk(0.0), 0.0);
        assert_eq!(min_jerk(1.0), 1.0);
        assert_abs_diff_eq!(min_jerk(0.5), 0.5, epsilon = 1e-15);
        // zero slope at the ends
        let h = 1e-6;
        assert!(min_jerk(h) / h < 1e-9);
        assert!((1.0 - min_jerk(1.0 - h)) / h < 1e-9);
    }

    #[test]
    fn orientation_forward_axis() {
        let q = gripper_orientation(&Vec3::y());
        assert_abs_diff_eq!(q.rotate(&Vec3::z()), Vec3::y(), epsilon = 1e-12);
        assert_abs_diff_eq!(q.rotate(&Vec3::y()), -Vec3::z(), epsilon = 1e-12);
        let down = gripper_orientation(&-Vec3::z());
        assert_abs_diff_eq!(down.rotate(&Vec3::z()), -Vec3::z(), epsilon = 1e-12);
        assert_abs_diff_eq!(down.rotate(&Vec3::x()), Vec3::x(), epsilon = 1e-12);
    }

    #[test]
    fn position_is_continuously_differentiable() {
        let script = Script::new(&ScenarioConfig::three_apples()).unwrap();
        let h = 1e-5;
        for seg in &script.segments[1..] {
            let t = seg.t0;
            let before = (script.pose_at(t).translation - script.pose_at(t - h).translation) / h;
            let after = (script.pose_at(t + h).translation - script.pose_at(t).translation) / h;
            assert!(before.norm() < 1e-6 && after.norm() < 1e-6, "velocity at joint t = {t}");
        }
    }

    #[test]
    fn twist_rotates_about_forward_axis() {
        let sc = ScenarioConfig::three_apples();
        let script = Script::new(&sc).unwrap();
        let twist = script.phase(0, PhaseKind::Twist).unwrap();
        let rel = twist.from.rotation.inverse() * twist.to.rotation;
        let axis_angle = crate::geom::log_so3(&rel);
        assert_abs_diff_eq!(axis_angle, Vec3::z() * sc.twist_angle, epsilon = 1e-12);
        assert_eq!(twist.from.translation, twist.to.translation);
    }
}

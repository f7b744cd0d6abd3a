//! Rigid-body primitives: unit quaternions, poses, and the SO(3) exponential/logarithm.
//!
//! Conventions, used everywhere in the crate and in every file format:
//!
//! * Quaternions are Hamilton quaternions stored as `(w, x, y, z)`.
//! * A rotation `q_ab` maps vectors expressed in frame `b` into frame `a`
//!   (`v_a = q_ab * v_b * conj(q_ab)`).
//! * A pose `pose_ab = (q_ab, t_ab)` maps points in `b` to points in `a`:
//!   `x_a = R(q_ab) x_b + t_ab`. Composition chains frames:
//!   `pose_ac = pose_ab ∘ pose_bc`.
//! * `q` and `-q` are the same rotation. Operations never flip signs on their own;
//!   [`Quat::canonical`] (w ≥ 0) is applied only when writing files.

use std::ops::{Mul, Neg};

use nalgebra::{Matrix3, Vector3};

use crate::scalar::Real;

/// Below this rotation angle `exp_so3` switches to its series expansion.
pub const SMALL_ANGLE: f64 = 1e-8;

/// Unit quaternion (Hamilton convention).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat<T: Real> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Quat<T> {
    pub fn identity() -> Self {
        Self::from_raw(T::one(), T::zero(), T::zero(), T::zero())
    }

    /// Builds a quaternion from components and normalizes it.
    ///
    /// A zero quaternion normalizes to identity.
    pub fn new(w: T, x: T, y: T, z: T) -> Self {
        Self::from_raw(w, x, y, z).normalize()
    }

    /// Builds a quaternion from components as given, without normalizing.
    pub const fn from_raw(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_array(wxyz: [T; 4]) -> Self {
        Self::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3])
    }

    pub fn to_array(self) -> [T; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn vector(&self) -> Vector3<T> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_axis_angle(axis: &Vector3<T>, angle: T) -> Self {
        let n = axis.norm();
        if n <= T::zero() {
            return Self::identity();
        }
        exp_so3(&(axis * (angle / n)))
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Self) -> T {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn normalize(self) -> Self {
        let n = self.norm();
        if n <= T::zero() || !n.is_finite() {
            return Self::identity();
        }
        Self::from_raw(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn conjugate(&self) -> Self {
        Self::from_raw(self.w, -self.x, -self.y, -self.z)
    }

    /// Inverse of a unit quaternion.
    pub fn inverse(&self) -> Self {
        self.conjugate()
    }

    /// Representative with `w >= 0`.
    pub fn canonical(self) -> Self {
        if self.w < T::zero() {
            -self
        } else {
            self
        }
    }

    pub fn rotate(&self, v: &Vector3<T>) -> Vector3<T> {
        let u = self.vector();
        let two = T::lit(2.0);
        let uv = u.cross(v);
        v + uv * (two * self.w) + u.cross(&uv) * two
    }

    pub fn to_rotation_matrix(&self) -> Matrix3<T> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let one = T::one();
        let two = T::lit(2.0);
        Matrix3::new(
            one - two * (y * y + z * z),
            two * (x * y - w * z),
            two * (x * z + w * y),
            two * (x * y + w * z),
            one - two * (x * x + z * z),
            two * (y * z - w * x),
            two * (x * z - w * y),
            two * (y * z + w * x),
            one - two * (x * x + y * y),
        )
    }

    /// Quaternion of a proper rotation matrix (Shepperd's method).
    pub fn from_rotation_matrix(m: &Matrix3<T>) -> Self {
        let one = T::one();
        let quarter = T::lit(0.25);
        let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let q = if trace > T::zero() {
            let s = (trace + one).sqrt() * T::lit(2.0);
            Self::from_raw(
                quarter * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            )
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (one + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * T::lit(2.0);
            Self::from_raw(
                (m[(2, 1)] - m[(1, 2)]) / s,
                quarter * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            )
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (one + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * T::lit(2.0);
            Self::from_raw(
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                quarter * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            )
        } else {
            let s = (one + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * T::lit(2.0);
            Self::from_raw(
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                quarter * s,
            )
        };
        q.normalize()
    }

    /// Spherical interpolation along the shortest arc, `s` in `[0, 1]`.
    pub fn slerp(&self, other: &Self, s: T) -> Self {
        let delta = log_so3(&(self.inverse() * *other));
        (*self * exp_so3(&(delta * s))).normalize()
    }

    /// Rotation equality up to the double cover.
    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        geodesic_angle(self, other) <= tol
    }

    pub fn cast<U: Real>(&self) -> Quat<U> {
        Quat::from_raw(
            U::lit(self.w.to_f64_lossy()),
            U::lit(self.x.to_f64_lossy()),
            U::lit(self.y.to_f64_lossy()),
            U::lit(self.z.to_f64_lossy()),
        )
    }
}

impl<T: Real> Default for Quat<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Mul for Quat<T> {
    type Output = Quat<T>;

    fn mul(self, r: Quat<T>) -> Quat<T> {
        let l = self;
        Quat::from_raw(
            l.w * r.w - l.x * r.x - l.y * r.y - l.z * r.z,
            l.w * r.x + l.x * r.w + l.y * r.z - l.z * r.y,
            l.w * r.y - l.x * r.z + l.y * r.w + l.z * r.x,
            l.w * r.z + l.x * r.y - l.y * r.x + l.z * r.w,
        )
    }
}

impl<T: Real> Neg for Quat<T> {
    type Output = Quat<T>;

    fn neg(self) -> Quat<T> {
        Quat::from_raw(-self.w, -self.x, -self.y, -self.z)
    }
}

/// Rigid transform `x_a = R x_b + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T: Real> {
    pub rotation: Quat<T>,
    pub translation: Vector3<T>,
}

impl<T: Real> Pose<T> {
    pub fn new(rotation: Quat<T>, translation: Vector3<T>) -> Self {
        Self {
            rotation: rotation.normalize(),
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Quat::identity(), Vector3::zeros())
    }

    pub fn from_translation(translation: Vector3<T>) -> Self {
        Self::new(Quat::identity(), translation)
    }

    pub fn from_rotation(rotation: Quat<T>) -> Self {
        Self::new(rotation, Vector3::zeros())
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: (self.rotation * other.rotation).normalize(),
            translation: self.rotation.rotate(&other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let inv = self.rotation.inverse();
        Self {
            rotation: inv,
            translation: -inv.rotate(&self.translation),
        }
    }

    pub fn transform_point(&self, x: &Vector3<T>) -> Vector3<T> {
        self.rotation.rotate(x) + self.translation
    }

    /// True when translations agree within `tol_t` and rotations within `tol_r` radians.
    pub fn approx_eq(&self, other: &Self, tol_t: T, tol_r: T) -> bool {
        (self.translation - other.translation).norm() <= tol_t
            && self.rotation.approx_eq(&other.rotation, tol_r)
    }

    pub fn cast<U: Real>(&self) -> Pose<U> {
        Pose {
            rotation: self.rotation.cast(),
            translation: self.translation.map(|v| U::lit(v.to_f64_lossy())),
        }
    }
}

impl<T: Real> Default for Pose<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Mul for Pose<T> {
    type Output = Pose<T>;

    fn mul(self, rhs: Pose<T>) -> Pose<T> {
        self.compose(&rhs)
    }
}

pub fn compose<T: Real>(a: &Pose<T>, b: &Pose<T>) -> Pose<T> {
    a.compose(b)
}

pub fn inverse<T: Real>(p: &Pose<T>) -> Pose<T> {
    p.inverse()
}

pub fn transform_point<T: Real>(p: &Pose<T>, x: &Vector3<T>) -> Vector3<T> {
    p.transform_point(x)
}

/// Angle of the relative rotation between `q1` and `q2`, in `[0, π]`.
pub fn geodesic_angle<T: Real>(q1: &Quat<T>, q2: &Quat<T>) -> T {
    let d = q1.inverse() * *q2;
    T::lit(2.0) * d.vector().norm().atan2(d.w.abs())
}

/// Axis-angle vector to unit quaternion.
pub fn exp_so3<T: Real>(v: &Vector3<T>) -> Quat<T> {
    let angle = v.norm();
    let half = T::lit(0.5);
    if angle < T::lit(SMALL_ANGLE) {
        let h = v * half;
        return Quat::new(T::one(), h.x, h.y, h.z);
    }
    let s = (angle * half).sin() / angle;
    Quat::from_raw((angle * half).cos(), v.x * s, v.y * s, v.z * s)
}

/// Unit quaternion to axis-angle vector with magnitude in `[0, π]`.
pub fn log_so3<T: Real>(q: &Quat<T>) -> Vector3<T> {
    let q = q.canonical();
    let u = q.vector();
    let n = u.norm();
    if n < T::lit(SMALL_ANGLE) {
        // sin(θ/2) ≈ θ/2 and w ≈ 1
        return u * (T::lit(2.0) / q.w);
    }
    let angle = T::lit(2.0) * n.atan2(q.w);
    u * (angle / n)
}

/// Cross-product matrix: `skew(a) * b == a × b`.
pub fn skew<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    Matrix3::new(
        T::zero(),
        -v.z,
        v.y,
        v.z,
        T::zero(),
        -v.x,
        -v.y,
        v.x,
        T::zero(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    type P = Pose<f64>;
    type Q = Quat<f64>;

    fn rot_z(angle: f64) -> Q {
        Q::from_axis_angle(&Vector3::z(), angle)
    }

    // Rotation matrix about z, written out by hand.
    fn rot_z_matrix(angle: f64) -> Matrix3<f64> {
        let (s, c) = angle.sin_cos();
        Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
    }

    #[test]
    fn compose_with_identity() {
        let p = P::new(Q::new(0.3, 0.1, -0.5, 0.8), Vector3::new(1.0, -2.0, 0.5));
        assert!(compose(&P::identity(), &p).approx_eq(&p, 1e-12, 1e-12));
        assert!(compose(&p, &inverse(&p)).approx_eq(&P::identity(), 1e-9, 1e-9));
    }

    #[test]
    fn compose_matches_matrix_arithmetic() {
        let a = P::new(rot_z(FRAC_PI_2), Vector3::new(1.0, 0.0, 0.0));
        let b = P::from_translation(Vector3::new(0.0, 1.0, 0.0));
        let c = compose(&a, &b);
        // R_a t_b + t_a with R_a from the explicit matrix
        let expected_t = rot_z_matrix(FRAC_PI_2) * Vector3::new(0.0, 1.0, 0.0) + Vector3::x();
        assert_abs_diff_eq!(expected_t, Vector3::zeros(), epsilon = 1e-12);
        assert_abs_diff_eq!(c.translation, expected_t, epsilon = 1e-12);
        assert!(c.rotation.approx_eq(&rot_z(FRAC_PI_2), 1e-12));
    }

    #[test]
    fn inverse_cases() {
        assert!(inverse(&P::identity()).approx_eq(&P::identity(), 0.0, 0.0));
        let t = P::from_translation(Vector3::new(1.0, 2.0, 3.0));
        assert_abs_diff_eq!(inverse(&t).translation, Vector3::new(-1.0, -2.0, -3.0));
        let p = P::new(Q::new(0.9, -0.2, 0.3, 0.1), Vector3::new(0.4, 0.5, -0.6));
        assert!(inverse(&inverse(&p)).approx_eq(&p, 1e-9, 1e-9));
    }

    #[test]
    fn geodesic_angle_cases() {
        let q = Q::new(0.2, 0.4, -0.1, 0.7);
        assert_abs_diff_eq!(geodesic_angle(&q, &q), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(geodesic_angle(&Q::identity(), &rot_z(FRAC_PI_2)), FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(geodesic_angle(&q, &-q), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(geodesic_angle(&Q::identity(), &rot_z(PI)), PI, epsilon = 1e-12);
    }

    #[test]
    fn exp_matches_rodrigues() {
        assert_eq!(exp_so3(&Vector3::<f64>::zeros()), Q::identity());
        let q = exp_so3(&Vector3::new(FRAC_PI_2, 0.0, 0.0));
        let h = (45.0f64).to_radians();
        assert_abs_diff_eq!(q.w, h.cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(q.x, h.sin(), epsilon = 1e-12);
        assert_abs_diff_eq!(q.y, 0.0);
        assert_abs_diff_eq!(q.z, 0.0);

        // Rodrigues: R = I + sinθ K + (1 − cosθ) K²
        let v = Vector3::<f64>::new(0.3, -1.1, 0.4);
        let theta = v.norm();
        let k = skew(&(v / theta));
        let r = Matrix3::identity() + k * theta.sin() + k * k * (1.0 - theta.cos());
        assert_abs_diff_eq!(exp_so3(&v).to_rotation_matrix(), r, epsilon = 1e-12);
    }

    #[test]
    fn exp_small_angle_branch() {
        let v = Vector3::new(1e-10, -2e-10, 3e-11);
        let q = exp_so3(&v);
        assert_abs_diff_eq!(q.norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(log_so3(&q), v, epsilon = 1e-18);
    }

    #[test]
    fn log_cases() {
        assert_eq!(log_so3(&Q::identity()), Vector3::zeros());
        assert_abs_diff_eq!(log_so3(&rot_z(FRAC_PI_2)), Vector3::new(0.0, 0.0, FRAC_PI_2), epsilon = 1e-12);
        let q = Q::new(-0.3, 0.5, 0.1, -0.2);
        assert_abs_diff_eq!(log_so3(&q), log_so3(&-q), epsilon = 1e-12);
    }

    #[test]
    fn transform_point_cases() {
        let x = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(transform_point(&P::identity(), &x), x);
        let up = P::from_translation(Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(transform_point(&up, &Vector3::zeros()), Vector3::new(0.0, 0.0, 1.0));
        let r = P::from_rotation(rot_z(FRAC_PI_2));
        let expected = rot_z_matrix(FRAC_PI_2) * Vector3::x();
        assert_abs_diff_eq!(transform_point(&r, &Vector3::x()), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, Vector3::y(), epsilon = 1e-12);
    }

    #[test]
    fn matrix_round_trip() {
        for q in [Q::new(0.1, 0.9, 0.2, -0.3), Q::new(0.0, 0.0, 1.0, 0.0), Q::new(0.0, 0.1, 0.2, 0.97), rot_z(PI)] {
            let back = Q::from_rotation_matrix(&q.to_rotation_matrix());
            assert!(back.approx_eq(&q, 1e-9));
        }
    }

    #[test]
    fn slerp_midpoint() {
        let a = rot_z(0.2);
        let b = rot_z(1.0);
        assert!(a.slerp(&b, 0.5).approx_eq(&rot_z(0.6), 1e-12));
        assert!(a.slerp(&-b, 0.5).approx_eq(&rot_z(0.6), 1e-12));
    }

    #[test]
    fn works_in_single_precision() {
        let a = Pose::<f32>::new(Quat::from_axis_angle(&Vector3::z(), 1.0), Vector3::new(1.0, 2.0, 3.0));
        let i = a.compose(&a.inverse());
        assert!(i.approx_eq(&Pose::identity(), 1e-5, 1e-5));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn quat() -> impl Strategy<Value = Q> {
            (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
                .prop_filter("non-degenerate", |(w, x, y, z)| w * w + x * x + y * y + z * z > 1e-3)
                .prop_map(|(w, x, y, z)| Q::new(w, x, y, z))
        }

        fn pose() -> impl Strategy<Value = P> {
            (quat(), -5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(q, x, y, z)| P::new(q, Vector3::new(x, y, z)))
        }

        proptest! {
            #[test]
            fn compose_preserves_norm_and_is_associative(a in pose(), b in pose(), c in pose()) {
                let ab = a.compose(&b);
                prop_assert!((ab.rotation.norm() - 1.0).abs() <= 1e-9);
                let left = ab.compose(&c);
                let right = a.compose(&b.compose(&c));
                prop_assert!(left.approx_eq(&right, 1e-9, 1e-9));
            }

            #[test]
            fn geodesic_is_symmetric_and_triangular(a in quat(), b in quat(), c in quat()) {
                let ab = geodesic_angle(&a, &b);
                prop_assert!((ab - geodesic_angle(&b, &a)).abs() <= 1e-9);
                prop_assert!((0.0..=PI).contains(&ab));
                prop_assert!(ab <= geodesic_angle(&a, &c) + geodesic_angle(&c, &b) + 1e-9);
            }

            #[test]
            fn exp_log_round_trip(axis in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), angle in 1e-7..(PI - 1e-3)) {
                let a = Vector3::new(axis.0, axis.1, axis.2);
                prop_assume!(a.norm() > 1e-3);
                let v = a.normalize() * angle;
                prop_assert!((log_so3(&exp_so3(&v)) - v).norm() <= 1e-9);
            }
        }
    }
}

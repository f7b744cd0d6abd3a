//! Inertial measurements synthesized from a uniformly sampled ground-truth trajectory.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::ekf::NoiseParams;
use crate::error::{Error, Result};
use crate::geom::log_so3;
use crate::streams::{ImuSample, Trajectory};
use crate::Vec3;

/// Continuous-time IMU error model.
#[derive(Debug, Clone, PartialEq)]
pub struct ImuNoiseModel {
    pub gyro_noise_density: f64,
    pub accel_noise_density: f64,
    pub gyro_bias_random_walk: f64,
    pub accel_bias_random_walk: f64,
    pub initial_gyro_bias: Vec3,
    pub initial_accel_bias: Vec3,
}

impl ImuNoiseModel {
    /// Densities from `noise` multiplied by `scale`; zero scale gives an ideal IMU.
    pub fn from_params(noise: &NoiseParams, scale: f64, initial_gyro_bias: Vec3, initial_accel_bias: Vec3) -> Self {
        Self {
            gyro_noise_density: noise.gyro_noise_density * scale,
            accel_noise_density: noise.accel_noise_density * scale,
            gyro_bias_random_walk: noise.gyro_bias_random_walk * scale,
            accel_bias_random_walk: noise.accel_bias_random_walk * scale,
            initial_gyro_bias,
            initial_accel_bias,
        }
    }

    pub fn ideal() -> Self {
        Self::from_params(&NoiseParams::default(), 0.0, Vec3::zeros(), Vec3::zeros())
    }
}

fn gaussian3(rng: &mut impl Rng, sigma: f64) -> Vec3 {
    let mut draw = || -> f64 { rng.sample(StandardNormal) };
    let v = Vec3::new(draw(), draw(), draw());
    v * sigma
}

/// Gyro and accelerometer readings at every ground-truth sample.
///
/// Derivatives are fourth-order central differences: angular rate from the rotation
/// vectors `log(q_k⁻¹ q_{k+j})`, specific force from the five-point second difference of
/// position rotated into the body frame. Samples within two of either end fall back to
/// three-point differences around the nearest valid centre. Biases follow a random walk
/// and white noise is added per sample.
pub fn synthesize_imu(gt: &Trajectory, model: &ImuNoiseModel, gravity: &Vec3, rng: &mut impl Rng) -> Result<Vec<ImuSample>> {
    let s = gt.samples();
    if s.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 ground-truth samples, got {}", s.len())));
    }
    let dt = (s[s.len() - 1].t - s[0].t) / (s.len() - 1) as f64;
    let uniform = s.windows(2).all(|w| ((w[1].t - w[0].t) - dt).abs() <= 1e-9 * dt.max(1.0));
    if !uniform {
        return Err(Error::InvalidInput("ground truth is not uniformly sampled".into()));
    }

    let rate = 1.0 / dt;
    let gyro_white = model.gyro_noise_density * rate.sqrt();
    let accel_white = model.accel_noise_density * rate.sqrt();
    let gyro_step = model.gyro_bias_random_walk * dt.sqrt();
    let accel_step = model.accel_bias_random_walk * dt.sqrt();
    let mut b_g = model.initial_gyro_bias;
    let mut b_a = model.initial_accel_bias;

    let mut out = Vec::with_capacity(s.len());
    for k in 0..s.len() {
        let n = s.len();
        let rel = |c: usize, j: usize| log_so3(&(s[c].pose.rotation.inverse() * s[j].pose.rotation));
        let pos = |j: usize| s[j].pose.translation;
        let (omega, a_world) = if k >= 2 && k + 2 < n {
            let omega = ((rel(k, k + 1) - rel(k, k - 1)) * 8.0 - (rel(k, k + 2) - rel(k, k - 2))) / (12.0 * dt);
            let acc = (-pos(k + 2) + pos(k + 1) * 16.0 - pos(k) * 30.0 + pos(k - 1) * 16.0 - pos(k - 2)) / (12.0 * dt * dt);
            (omega, acc)
        } else {
            let c = k.clamp(1, n - 2);
            let omega = log_so3(&(s[c - 1].pose.rotation.inverse() * s[c + 1].pose.rotation)) / (2.0 * dt);
            (omega, (pos(c + 1) - pos(c) * 2.0 + pos(c - 1)) / (dt * dt))
        };
        let specific = s[k].pose.rotation.inverse().rotate(&(a_world - gravity));

        let gyro = omega + b_g + gaussian3(rng, gyro_white);
        let accel = specific + b_a + gaussian3(rng, accel_white);
        out.push(ImuSample { t: s[k].t, gyro, accel });

        b_g += gaussian3(rng, gyro_step);
        b_a += gaussian3(rng, accel_step);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Quat;
    use crate::streams::TrajectorySample;
    use crate::Pose;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const G: Vec3 = Vec3::new(0.0, 0.0, -9.81);

    fn traj(n: usize, rate: f64, pose: impl Fn(f64) -> Pose) -> Trajectory {
        Trajectory::from_samples(
            (0..n)
                .map(|k| {
                    let t = k as f64 / rate;
                    TrajectorySample { t, pose: pose(t), cov_diag: None }
                })
                .collect(),
        )
        .unwrap()
    }

    fn ideal(gt: &Trajectory) -> Vec<ImuSample> {
        synthesize_imu(gt, &ImuNoiseModel::ideal(), &G, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    #[test]
    fn static_identity_reads_gravity() {
        let imu = ideal(&traj(50, 200.0, |_| Pose::identity()));
        for s in imu {
            assert_abs_diff_eq!(s.accel, Vec3::new(0.0, 0.0, 9.81), epsilon = 1e-12);
            assert_abs_diff_eq!(s.gyro, Vec3::zeros(), epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_velocity_reads_gravity() {
        let imu = ideal(&traj(50, 200.0, |t| Pose::from_translation(Vec3::new(0.3 * t, -0.1 * t, 0.2 * t))));
        for s in imu {
            assert_abs_diff_eq!(s.accel, Vec3::new(0.0, 0.0, 9.81), epsilon = 1e-9);
        }
    }

    #[test]
    fn yaw_rate_oracle() {
        let imu = ideal(&traj(400, 200.0, |t| Pose::from_rotation(Quat::from_axis_angle(&Vec3::z(), t))));
        for s in imu {
            assert_abs_diff_eq!(s.gyro, Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-6);
            // gravity along body z is unaffected by yaw
            assert_abs_diff_eq!(s.accel, Vec3::new(0.0, 0.0, 9.81), epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_short_or_uneven_input() {
        assert!(synthesize_imu(&traj(2, 200.0, |_| Pose::identity()), &ImuNoiseModel::ideal(), &G, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        let uneven = Trajectory::from_samples(
            [0.0, 0.005, 0.02, 0.025]
                .iter()
                .map(|&t| TrajectorySample { t, pose: Pose::identity(), cov_diag: None })
                .collect(),
        )
        .unwrap();
        assert!(synthesize_imu(&uneven, &ImuNoiseModel::ideal(), &G, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn white_noise_matches_density() {
        let model = ImuNoiseModel::from_params(&NoiseParams::default(), 1.0, Vec3::zeros(), Vec3::zeros());
        let model = ImuNoiseModel {
            gyro_bias_random_walk: 0.0,
            accel_bias_random_walk: 0.0,
            ..model
        };
        let gt = traj(20_000, 200.0, |_| Pose::identity());
        let imu = synthesize_imu(&gt, &model, &G, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let var = imu.iter().map(|s| s.gyro.x * s.gyro.x).sum::<f64>() / imu.len() as f64;
        let expected = model.gyro_noise_density.powi(2) * 200.0;
        assert!((var / expected - 1.0).abs() < 0.05, "variance ratio {}", var / expected);
    }

    #[test]
    fn constant_bias_is_added() {
        let b = Vec3::new(0.01, -0.02, 0.03);
        let model = ImuNoiseModel { initial_accel_bias: b, initial_gyro_bias: b, ..ImuNoiseModel::ideal() };
        let imu = synthesize_imu(&traj(10, 200.0, |_| Pose::identity()), &model, &G, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_abs_diff_eq!(imu[5].gyro, b, epsilon = 1e-15);
        assert_abs_diff_eq!(imu[5].accel, Vec3::new(0.0, 0.0, 9.81) + b, epsilon = 1e-12);
    }

    #[test]
    fn sixty_second_double_integration_stays_within_a_millimetre() {
        let rate = 200.0;
        let pos = |t: f64| Vec3::new(0.3 * (0.5 * t).sin(), 0.2 * (0.3 * t).cos(), 0.1 * t.sin());
        let vel = |t: f64| Vec3::new(0.15 * (0.5 * t).cos(), -0.06 * (0.3 * t).sin(), 0.1 * t.cos());
        let rot = |t: f64| crate::geom::exp_so3(&Vec3::new(0.4 * (0.7 * t).sin(), 0.3 * (0.4 * t).cos(), 0.5 * t));
        let gt = traj(60 * 200 + 1, rate, |t| Pose::new(rot(t), pos(t)));
        let imu = ideal(&gt);

        // plain strapdown with world-frame trapezoids, independent of the filter
        let h = 1.0 / rate;
        let (mut p, mut v, mut q) = (pos(0.0), vel(0.0), rot(0.0));
        let mut worst: f64 = 0.0;
        for w in imu.windows(2) {
            let q1 = q * crate::geom::exp_so3(&((w[0].gyro + w[1].gyro) * (0.5 * h) + w[0].gyro.cross(&w[1].gyro) * (h * h / 12.0)));
            let a = (q.rotate(&w[0].accel) + q1.rotate(&w[1].accel)) * 0.5 + G;
            p += v * h + a * (0.5 * h * h);
            v += a * h;
            q = q1;
            worst = worst.max((p - pos(w[1].t)).norm());
        }
        assert!(worst < 1e-3, "max position error {worst}");
    }
}

//! Error-state EKF fusing IMU strapdown propagation with marker pose observations.
//!
//! Nominal state: position `p`, velocity `v` (world), orientation `q` (body → world),
//! gyro bias `b_g`, accel bias `b_a`. The 15-dim error state is ordered
//! `(δp, δv, δθ, δb_g, δb_a)` where the orientation error is expressed in the world
//! frame: `q_true = exp(δθ) ∘ q`. The pose residual uses the same side,
//! `log(q_obs ∘ q⁻¹)`, and corrections are injected on the left.
//!
//! Discretization over a step `dt` with `R = R(q)`, `a_b = accel - b_a`:
//!
//! ```text
//! F = I + [ 0  I·dt  0              0      0     ]
//!         [ 0  0    -[R a_b]×·dt    0     -R·dt  ]
//!         [ 0  0     0             -R·dt   0     ]
//!         [ 0  0     0              0      0     ]
//!         [ 0  0     0              0      0     ]
//! Q = diag(0, σ_a²·dt·I, σ_g²·dt·I, σ_bg²·dt·I, σ_ba²·dt·I)
//! ```
//!
//! with σ the continuous noise densities from [`NoiseParams`].

use nalgebra::{SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{exp_so3, log_so3, skew, Pose, Quat};
use crate::markerloc::{fuse_simultaneous, group_by_window, gripper_pose_from_detection, is_gripper_detection, Matrix6, PoseObservation};
use crate::scalar::Real;
use crate::streams::{ImuSample, Measurement, MeasurementEvent, RigConfig, Trajectory, TrajectorySample};

pub type Matrix15<T> = SMatrix<T, 15, 15>;

/// Longest single propagation step; longer IMU gaps are split evenly.
pub const MAX_PREDICT_STEP: f64 = 0.1;
/// Observations at most this much older than the filter are applied without re-propagation.
pub const STALE_WINDOW: f64 = 0.05;

const P: usize = 0;
const V: usize = 3;
const TH: usize = 6;
const BG: usize = 9;
const BA: usize = 12;

/// Process, initialization, gating and detection noise.
///
/// | field | default | unit |
/// |---|---|---|
/// | `gyro_noise_density` | 1e-3 | rad/s/√Hz |
/// | `accel_noise_density` | 1e-2 | m/s²/√Hz |
/// | `gyro_bias_random_walk` | 1e-5 | rad/s²/√Hz |
/// | `accel_bias_random_walk` | 1e-4 | m/s³/√Hz |
/// | `init_sigma_position` | 0.01 | m |
/// | `init_sigma_velocity` | 0.1 | m/s |
/// | `init_sigma_attitude` | 0.02 | rad |
/// | `init_sigma_gyro_bias` | 0.005 | rad/s |
/// | `init_sigma_accel_bias` | 0.05 | m/s² |
/// | `gate_threshold` | 12.592 | χ², 6 dof, 95 % |
/// | `marker_sigma_translation` | 0.005 | m |
/// | `marker_sigma_rotation` | 1° | rad |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    pub gyro_noise_density: f64,
    pub accel_noise_density: f64,
    pub gyro_bias_random_walk: f64,
    pub accel_bias_random_walk: f64,
    pub init_sigma_position: f64,
    pub init_sigma_velocity: f64,
    pub init_sigma_attitude: f64,
    pub init_sigma_gyro_bias: f64,
    pub init_sigma_accel_bias: f64,
    pub gate_threshold: f64,
    pub marker_sigma_translation: f64,
    pub marker_sigma_rotation: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            gyro_noise_density: 1e-3,
            accel_noise_density: 1e-2,
            gyro_bias_random_walk: 1e-5,
            accel_bias_random_walk: 1e-4,
            init_sigma_position: 0.01,
            init_sigma_velocity: 0.1,
            init_sigma_attitude: 0.02,
            init_sigma_gyro_bias: 0.005,
            init_sigma_accel_bias: 0.05,
            gate_threshold: 12.592,
            marker_sigma_translation: 0.005,
            marker_sigma_rotation: 1f64.to_radians(),
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gyro_noise_density", self.gyro_noise_density),
            ("accel_noise_density", self.accel_noise_density),
            ("gyro_bias_random_walk", self.gyro_bias_random_walk),
            ("accel_bias_random_walk", self.accel_bias_random_walk),
            ("init_sigma_position", self.init_sigma_position),
            ("init_sigma_velocity", self.init_sigma_velocity),
            ("init_sigma_attitude", self.init_sigma_attitude),
            ("init_sigma_gyro_bias", self.init_sigma_gyro_bias),
            ("init_sigma_accel_bias", self.init_sigma_accel_bias),
            ("gate_threshold", self.gate_threshold),
            ("marker_sigma_translation", self.marker_sigma_translation),
            ("marker_sigma_rotation", self.marker_sigma_rotation),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("noise parameter {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let n: NoiseParams = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        n.validate()?;
        Ok(n)
    }
}

/// Noise densities and gravity in the filter's scalar type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessModel<T: Real> {
    pub gyro_psd: T,
    pub accel_psd: T,
    pub gyro_bias_psd: T,
    pub accel_bias_psd: T,
    pub gravity: Vector3<T>,
}

impl<T: Real> ProcessModel<T> {
    pub fn new(noise: &NoiseParams, gravity: &Vector3<f64>) -> Self {
        Self {
            gyro_psd: T::lit(noise.gyro_noise_density.powi(2)),
            accel_psd: T::lit(noise.accel_noise_density.powi(2)),
            gyro_bias_psd: T::lit(noise.gyro_bias_random_walk.powi(2)),
            accel_bias_psd: T::lit(noise.accel_bias_random_walk.powi(2)),
            gravity: gravity.map(T::lit),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterState<T: Real> {
    pub t: f64,
    pub p: Vector3<T>,
    pub v: Vector3<T>,
    /// Body → world.
    pub q: Quat<T>,
    pub b_g: Vector3<T>,
    pub b_a: Vector3<T>,
    /// Error covariance ordered (δp, δv, δθ, δb_g, δb_a).
    pub cov: Matrix15<T>,
}

impl<T: Real> FilterState<T> {
    pub fn pose(&self) -> Pose<T> {
        Pose {
            rotation: self.q,
            translation: self.p,
        }
    }

    /// Variances of position and world-frame attitude error.
    pub fn pose_variances(&self) -> [T; 6] {
        let d = |i| self.cov[(i, i)];
        [d(P), d(P + 1), d(P + 2), d(TH), d(TH + 1), d(TH + 2)]
    }
}

/// State at the first observation: pose from the observation, zero velocity and biases.
pub fn initialize<T: Real>(first_obs: &PoseObservation<T>, noise: &NoiseParams) -> FilterState<T> {
    let mut diag = SVector::<T, 15>::zeros();
    let blocks = [
        (P, noise.init_sigma_position),
        (V, noise.init_sigma_velocity),
        (TH, noise.init_sigma_attitude),
        (BG, noise.init_sigma_gyro_bias),
        (BA, noise.init_sigma_accel_bias),
    ];
    for (start, sigma) in blocks {
        for i in 0..3 {
            diag[start + i] = T::lit(sigma * sigma);
        }
    }
    FilterState {
        t: first_obs.t,
        p: first_obs.pose_wg.translation,
        v: Vector3::zeros(),
        q: first_obs.pose_wg.rotation.normalize(),
        b_g: Vector3::zeros(),
        b_a: Vector3::zeros(),
        cov: Matrix15::from_diagonal(&diag),
    }
}

/// Strapdown propagation over `dt` seconds with constant IMU readings.
///
/// Steps longer than [`MAX_PREDICT_STEP`] are split into equal substeps.
pub fn predict<T: Real>(
    state: &FilterState<T>,
    gyro: &Vector3<T>,
    accel: &Vector3<T>,
    dt: f64,
    model: &ProcessModel<T>,
) -> Result<FilterState<T>> {
    predict_between(state, (gyro, accel), (gyro, accel), dt, model)
}

/// Propagates across an interval whose IMU readings vary linearly from `start` to `end`.
/// Intervals longer than `MAX_PREDICT_STEP` are split into equal substeps.
pub fn predict_between<T: Real>(
    state: &FilterState<T>,
    start: (&Vector3<T>, &Vector3<T>),
    end: (&Vector3<T>, &Vector3<T>),
    dt: f64,
    model: &ProcessModel<T>,
) -> Result<FilterState<T>> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveDt(dt));
    }
    let steps = (dt / MAX_PREDICT_STEP).ceil().max(1.0) as usize;
    let h = dt / steps as f64;
    let lerp = |a: &Vector3<T>, b: &Vector3<T>, f: f64| a + (b - a) * T::lit(f);
    let mut s = state.clone();
    for k in 0..steps {
        let (f0, f1) = (k as f64 / steps as f64, (k + 1) as f64 / steps as f64);
        let g = (lerp(start.0, end.0, f0), lerp(start.0, end.0, f1));
        let a = (lerp(start.1, end.1, f0), lerp(start.1, end.1, f1));
        s = predict_step(&s, (&g.0, &a.0), (&g.1, &a.1), h, model);
    }
    // keep the clock exact rather than accumulating substep rounding
    s.t = state.t + dt;
    Ok(s)
}

fn predict_step<T: Real>(
    s: &FilterState<T>,
    start: (&Vector3<T>, &Vector3<T>),
    end: (&Vector3<T>, &Vector3<T>),
    dt_s: f64,
    m: &ProcessModel<T>,
) -> FilterState<T> {
    let dt = T::lit(dt_s);
    let half = T::lit(0.5);
    let r = s.q.to_rotation_matrix();
    let (w0, w1) = (start.0 - s.b_g, end.0 - s.b_g);
    let omega = (w0 + w1) * half;
    // second-order coning term for a linearly varying rate
    let dtheta = omega * dt + w0.cross(&w1) * (dt * dt / T::lit(12.0));
    let a0 = start.1 - s.b_a;
    let a1 = end.1 - s.b_a;
    let a_body = (a0 + a1) * half;
    // trapezoid on the world-frame specific force, each reading at its own attitude
    let q = (s.q * exp_so3(&dtheta)).normalize();
    let f_world = (r * a0 + q.to_rotation_matrix() * a1) * half;
    let a_world = f_world + m.gravity;

    let p = s.p + s.v * dt + a_world * (half * dt * dt);
    let v = s.v + a_world * dt;

    let mut f = Matrix15::<T>::identity();
    f.fixed_view_mut::<3, 3>(P, V).copy_from(&(nalgebra::Matrix3::identity() * dt));
    f.fixed_view_mut::<3, 3>(V, TH).copy_from(&(-skew(&(r * a_body)) * dt));
    f.fixed_view_mut::<3, 3>(V, BA).copy_from(&(-r * dt));
    f.fixed_view_mut::<3, 3>(TH, BG).copy_from(&(-r * dt));

    let mut q_diag = SVector::<T, 15>::zeros();
    for i in 0..3 {
        q_diag[V + i] = m.accel_psd * dt;
        q_diag[TH + i] = m.gyro_psd * dt;
        q_diag[BG + i] = m.gyro_bias_psd * dt;
        q_diag[BA + i] = m.accel_bias_psd * dt;
    }
    let cov = symmetrize(&(f * s.cov * f.transpose() + Matrix15::from_diagonal(&q_diag)));

    FilterState {
        t: s.t + dt_s,
        p,
        v,
        q,
        b_g: s.b_g,
        b_a: s.b_a,
        cov,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome<T: Real> {
    pub state: FilterState<T>,
    pub accepted: bool,
    pub mahalanobis2: T,
}

/// Pose update with chi-square gating. A rejected observation leaves the state untouched.
pub fn update<T: Real>(state: &FilterState<T>, obs: &PoseObservation<T>, gate: T) -> Result<UpdateOutcome<T>> {
    check_psd(&obs.cov)?;

    let mut h = SMatrix::<T, 6, 15>::zeros();
    for i in 0..3 {
        h[(i, P + i)] = T::one();
        h[(3 + i, TH + i)] = T::one();
    }
    let dp = obs.pose_wg.translation - state.p;
    let dth = log_so3(&(obs.pose_wg.rotation * state.q.inverse()));
    let r = SVector::<T, 6>::new(dp.x, dp.y, dp.z, dth.x, dth.y, dth.z);

    let pht = state.cov * h.transpose();
    let s = symmetrize6(&(h * pht + obs.cov));
    let s_inv = match s.cholesky() {
        Some(c) => c.inverse(),
        None => s.try_inverse().ok_or(Error::NonPsdCovariance)?,
    };
    let mahalanobis2 = (r.transpose() * s_inv * r)[(0, 0)];

    if !(mahalanobis2 <= gate) {
        return Ok(UpdateOutcome {
            state: state.clone(),
            accepted: false,
            mahalanobis2,
        });
    }

    let k = pht * s_inv;
    let dx = k * r;
    let seg = |i: usize| Vector3::new(dx[i], dx[i + 1], dx[i + 2]);

    let i_kh = Matrix15::<T>::identity() - k * h;
    let cov = symmetrize(&(i_kh * state.cov * i_kh.transpose() + k * obs.cov * k.transpose()));

    Ok(UpdateOutcome {
        state: FilterState {
            t: state.t.max(obs.t),
            p: state.p + seg(P),
            v: state.v + seg(V),
            q: (exp_so3(&seg(TH)) * state.q).normalize(),
            b_g: state.b_g + seg(BG),
            b_a: state.b_a + seg(BA),
            cov,
        },
        accepted: true,
        mahalanobis2,
    })
}

fn symmetrize<T: Real>(m: &Matrix15<T>) -> Matrix15<T> {
    (m + m.transpose()) * T::lit(0.5)
}

fn symmetrize6<T: Real>(m: &Matrix6<T>) -> Matrix6<T> {
    (m + m.transpose()) * T::lit(0.5)
}

fn check_psd<T: Real>(c: &Matrix6<T>) -> Result<()> {
    let scale = c.abs().max().max(T::lit(1e-300));
    let asym = (c - c.transpose()).abs().max();
    if !(asym <= scale * T::lit(1e-9)) || c.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonPsdCovariance);
    }
    let min_eig = symmetrize6(c).symmetric_eigenvalues().min();
    if min_eig < -scale * T::lit(1e-9) {
        return Err(Error::NonPsdCovariance);
    }
    Ok(())
}

/// What the filter did with one observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateStatus {
    Init,
    Accepted,
    Rejected,
    StaleApplied,
    StaleRejected,
    StaleDropped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub t: f64,
    pub status: UpdateStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mahalanobis2: Option<f64>,
    pub sources: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterLog {
    pub records: Vec<LogRecord>,
}

impl FilterLog {
    pub fn accepted(&self) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r.status, UpdateStatus::Accepted | UpdateStatus::StaleApplied))
            .count()
    }

    pub fn rejected(&self) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r.status, UpdateStatus::Rejected | UpdateStatus::StaleRejected))
            .count()
    }
}

/// Input to the sequential filter: raw IMU samples and epoch-fused observations.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterInput {
    Imu(ImuSample),
    Observation(PoseObservation<f64>),
}

impl FilterInput {
    fn t(&self) -> f64 {
        match self {
            FilterInput::Imu(s) => s.t,
            FilterInput::Observation(o) => o.t,
        }
    }
}

/// Turns merged events into filter inputs. Gripper detections are fused per epoch and
/// each fused observation is scheduled at the time of its latest member, after any IMU
/// sample with the same timestamp.
pub fn filter_inputs(events: &[MeasurementEvent], rig: &RigConfig) -> Vec<FilterInput> {
    let mut imu = Vec::new();
    let mut obs = Vec::new();
    for e in events {
        match &e.measurement {
            Measurement::Imu(s) => imu.push(s.clone()),
            Measurement::Detection(d) if is_gripper_detection(d, rig) => {
                obs.push(gripper_pose_from_detection(d, rig).expect("ids checked"));
            }
            _ => {}
        }
    }
    let epochs: Vec<(f64, PoseObservation<f64>)> = group_by_window(obs, rig.fusion_window)
        .into_iter()
        .map(|g| {
            let last = g.iter().map(|o| o.t).fold(f64::NEG_INFINITY, f64::max);
            (last, fuse_simultaneous(&g).expect("non-empty group"))
        })
        .collect();

    let mut out = Vec::with_capacity(imu.len() + epochs.len());
    let mut epochs = epochs.into_iter().peekable();
    for s in imu {
        while let Some((at, _)) = epochs.peek() {
            if *at < s.t {
                out.push(FilterInput::Observation(epochs.next().unwrap().1));
            } else {
                break;
            }
        }
        out.push(FilterInput::Imu(s));
    }
    out.extend(epochs.map(|(_, o)| FilterInput::Observation(o)));
    out
}

/// Sequential filter driver. Idles until the first observation, then emits one
/// trajectory sample per processed input.
#[derive(Debug, Clone)]
pub struct Filter<T: Real> {
    noise: NoiseParams,
    model: ProcessModel<T>,
    state: Option<FilterState<T>>,
    /// Latest IMU sample; held constant until the next one arrives.
    held: Option<ImuSample>,
    /// Whether observations are fused or only used to initialize.
    use_observations: bool,
    trajectory: Trajectory,
    log: FilterLog,
}

impl<T: Real> Filter<T> {
    pub fn new(noise: &NoiseParams, gravity: &Vector3<f64>) -> Self {
        Self {
            noise: noise.clone(),
            model: ProcessModel::new(noise, gravity),
            state: None,
            held: None,
            use_observations: true,
            trajectory: Trajectory::new(),
            log: FilterLog::default(),
        }
    }

    /// Dead-reckoning mode: the first observation initializes, later ones are ignored.
    pub fn dead_reckoning(noise: &NoiseParams, gravity: &Vector3<f64>) -> Self {
        Self {
            use_observations: false,
            ..Self::new(noise, gravity)
        }
    }

    pub fn state(&self) -> Option<&FilterState<T>> {
        self.state.as_ref()
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn log(&self) -> &FilterLog {
        &self.log
    }

    pub fn finish(self) -> (Trajectory, FilterLog) {
        (self.trajectory, self.log)
    }

    pub fn process(&mut self, input: &FilterInput) -> Result<()> {
        match input {
            FilterInput::Imu(s) => self.process_imu(s),
            FilterInput::Observation(o) => self.process_observation(o),
        }
    }

    fn process_imu(&mut self, sample: &ImuSample) -> Result<()> {
        let Some(state) = &self.state else {
            self.held = Some(sample.clone());
            return Ok(());
        };
        if sample.t > state.t {
            // trapezoid between the reading at the state time and this sample
            let (g0, a0) = match &self.held {
                Some(h) if sample.t > h.t => {
                    let f = ((state.t - h.t) / (sample.t - h.t)).clamp(0.0, 1.0);
                    (h.gyro + (sample.gyro - h.gyro) * f, h.accel + (sample.accel - h.accel) * f)
                }
                _ => (sample.gyro, sample.accel),
            };
            let (g0, a0) = (g0.map(T::lit), a0.map(T::lit));
            let (g1, a1) = (sample.gyro.map(T::lit), sample.accel.map(T::lit));
            let dt = sample.t - state.t;
            let next = if dt > MAX_PREDICT_STEP {
                // a dropout in the IMU stream: hold the last reading across the gap
                predict(state, &g0, &a0, dt, &self.model)?
            } else {
                predict_between(state, (&g0, &a0), (&g1, &a1), dt, &self.model)?
            };
            self.state = Some(next);
        }
        self.held = Some(sample.clone());
        self.emit();
        Ok(())
    }

    fn process_observation(&mut self, obs: &PoseObservation<f64>) -> Result<()> {
        let sources = obs
            .source
            .iter()
            .map(|s| format!("{}/{}", s.camera_id, s.marker_id))
            .collect();
        let Some(state) = &self.state else {
            self.state = Some(initialize(&obs.cast(), &self.noise));
            self.log.records.push(LogRecord {
                t: obs.t,
                status: UpdateStatus::Init,
                mahalanobis2: None,
                sources,
            });
            self.emit();
            return Ok(());
        };
        if !self.use_observations {
            return Ok(());
        }

        let stale = obs.t < state.t;
        if stale && state.t - obs.t > STALE_WINDOW {
            self.log.records.push(LogRecord {
                t: obs.t,
                status: UpdateStatus::StaleDropped,
                mahalanobis2: None,
                sources,
            });
            return Ok(());
        }
        let predicted = if obs.t > state.t {
            self.propagate_held(state, obs.t)?
        } else {
            state.clone()
        };
        let outcome = update(&predicted, &obs.cast(), T::lit(self.noise.gate_threshold))?;
        let status = match (stale, outcome.accepted) {
            (false, true) => UpdateStatus::Accepted,
            (false, false) => UpdateStatus::Rejected,
            (true, true) => UpdateStatus::StaleApplied,
            (true, false) => UpdateStatus::StaleRejected,
        };
        self.log.records.push(LogRecord {
            t: obs.t,
            status,
            mahalanobis2: Some(outcome.mahalanobis2.to_f64_lossy()),
            sources,
        });
        self.state = Some(outcome.state);
        self.emit();
        Ok(())
    }

    /// Propagates with the held IMU reading, or with a constant-velocity model when no
    /// IMU data has been seen.
    fn propagate_held(&self, state: &FilterState<T>, to: f64) -> Result<FilterState<T>> {
        let (gyro, accel) = match &self.held {
            Some(h) => (h.gyro.map(T::lit), h.accel.map(T::lit)),
            None => {
                // zero angular rate and zero net world acceleration
                let specific = state.q.inverse().rotate(&(-self.model.gravity));
                (state.b_g, specific + state.b_a)
            }
        };
        predict(state, &gyro, &accel, to - state.t, &self.model)
    }

    fn emit(&mut self) {
        let s = self.state.as_ref().expect("emit after initialization");
        let pose = s.pose();
        self.trajectory.push(TrajectorySample {
            t: s.t,
            pose: pose.cast(),
            cov_diag: Some(s.pose_variances().map(|v| v.to_f64_lossy())),
        });
    }
}

/// Runs the full filter over merged events in double precision.
pub fn run_filter(events: &[MeasurementEvent], rig: &RigConfig, noise: &NoiseParams) -> Result<(Trajectory, FilterLog)> {
    run_filter_with::<f64>(events, rig, noise, |_| {})
}

/// Generic driver with a hook called after every processed input.
pub fn run_filter_with<T: Real>(
    events: &[MeasurementEvent],
    rig: &RigConfig,
    noise: &NoiseParams,
    mut on_step: impl FnMut(&FilterState<T>),
) -> Result<(Trajectory, FilterLog)> {
    if events.is_empty() {
        return Err(Error::InvalidInput("no events to filter".into()));
    }
    let mut filter = Filter::<T>::new(noise, &rig.gravity);
    for input in filter_inputs(events, rig) {
        filter.process(&input)?;
        if let Some(s) = filter.state() {
            on_step(s);
        }
    }
    if filter.state().is_none() {
        return Err(Error::InvalidInput("no gripper observation to initialize the filter".into()));
    }
    Ok(filter.finish())
}

impl FilterInput {
    pub fn time(&self) -> f64 {
        self.t()
    }
}

//! World-frame extrinsics for the external cameras.
//!
//! Each camera's initial pose comes from its assigned tag: `pose_wc = pose_wt ∘ pose_ct⁻¹`.
//! The anchor camera keeps that pose. Every other camera is refined by minimizing the
//! disagreement between the gripper poses the two cameras report at paired epochs:
//!
//! ```text
//! cost(δ) = Σ_k ‖p_anchor,k − p_i,k‖² + λ · angle(q_anchor,k, q_i,k)²
//! pose_wc_i(δ) = init_i ∘ (exp(δ_ω), δ_t)
//! ```
//!
//! The perturbation is applied on the right so the cost, and therefore the optimizer's
//! path, does not depend on how the world frame is labeled.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{exp_so3, geodesic_angle, Pose};
use crate::markerloc::{detection_covariance, fuse_simultaneous, gripper_pose_in_camera, group_by_window, is_gripper_detection, weighted_quaternion_mean, PoseObservation};
use crate::scalar::Real;
use crate::streams::{MarkerDetection, Measurement, MeasurementEvent, RigConfig};

/// Fewest paired epochs a camera needs before it can be refined.
pub const MIN_PAIRED_EPOCHS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexParams {
    /// Initial simplex edge per coordinate. Empty means 0.05 for every coordinate.
    pub initial_step: Vec<f64>,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Stop when `f_worst − f_best` falls to this value.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SimplexParams {
    fn default() -> Self {
        Self {
            initial_step: Vec::new(),
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            tolerance: 1e-14,
            max_iterations: 10_000,
        }
    }
}

impl SimplexParams {
    pub fn with_step(step: Vec<f64>) -> Self {
        Self {
            initial_step: step,
            ..Self::default()
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let coeffs = [self.reflection, self.expansion, self.contraction, self.shrink, self.tolerance];
        if coeffs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::Config("simplex coefficients and tolerance must be positive".into()));
        }
        if !self.initial_step.is_empty() && self.initial_step.len() != dim {
            return Err(Error::Config(format!(
                "initial_step has {} entries for a {dim}-dimensional problem",
                self.initial_step.len()
            )));
        }
        if self.initial_step.iter().any(|s| !(s.is_finite() && *s != 0.0)) {
            return Err(Error::Config("initial_step entries must be finite and non-zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub f: T,
    pub iterations: usize,
    /// Whether the value-spread tolerance was met before the iteration limit.
    pub converged: bool,
}

/// Downhill simplex minimization. Non-finite costs away from `x0` count as +∞.
pub fn nelder_mead<T: Real>(mut cost: impl FnMut(&[T]) -> T, x0: &[T], params: &SimplexParams) -> Result<Minimum<T>> {
    let n = x0.len();
    params.validate(n)?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite starting point".into()));
    }
    let f0 = cost(x0);
    if !f0.is_finite() {
        return Err(Error::NonFiniteCost);
    }
    let mut eval = |x: &[T]| {
        let f = cost(x);
        if f.is_finite() {
            f
        } else {
            T::max_value().expect("real type has a maximum")
        }
    };

    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += T::lit(params.initial_step.get(i).copied().unwrap_or(0.05));
        let f = eval(&x);
        simplex.push((x, f));
    }

    let (alpha, gamma, rho, sigma) = (
        T::lit(params.reflection),
        T::lit(params.expansion),
        T::lit(params.contraction),
        T::lit(params.shrink),
    );
    let tol = T::lit(params.tolerance);
    let along = |c: &[T], d: &[T], s: T| -> Vec<T> { c.iter().zip(d).map(|(ci, di)| *ci + s * (*di - *ci)).collect() };

    let mut iterations = 0;
    loop {
        // stable: ties keep earlier vertices (x0 first) in front
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("costs are never NaN"));
        let spread = simplex[n].1 - simplex[0].1;
        if spread <= tol {
            return Ok(finish(simplex, iterations, true));
        }
        if iterations >= params.max_iterations {
            return Ok(finish(simplex, iterations, false));
        }
        iterations += 1;

        let mut centroid = vec![T::zero(); n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += *xi;
            }
        }
        let inv = T::one() / T::lit(n as f64);
        centroid.iter_mut().for_each(|c| *c *= inv);

        let worst = simplex[n].0.clone();
        let f_best = simplex[0].1;
        let f_second = simplex[n - 1].1;
        let f_worst = simplex[n].1;

        let xr = along(&centroid, &worst, -alpha);
        let fr = eval(&xr);
        if fr < f_best {
            let xe = along(&centroid, &worst, -alpha * gamma);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < f_second {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < f_worst {
            let xc = along(&centroid, &xr, rho);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(&centroid, &worst, rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < fr.min(f_worst) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let x = along(&best, &v.0, sigma);
            let f = eval(&x);
            *v = (x, f);
        }
    }
}

fn finish<T: Real>(mut simplex: Vec<(Vec<T>, T)>, iterations: usize, converged: bool) -> Minimum<T> {
    let (x, f) = simplex.swap_remove(0);
    Minimum {
        x,
        f,
        iterations,
        converged,
    }
}

/// Camera pose from sightings of its tag: `tag_pose_wt ∘ mean(pose_ct)⁻¹`.
pub fn camera_pose_from_tag(detections: &[MarkerDetection], tag_pose_wt: &Pose<f64>) -> Result<Pose<f64>> {
    if detections.is_empty() {
        return Err(Error::InvalidInput("no tag detections for camera pose".into()));
    }
    let n = detections.len() as f64;
    let translation = detections
        .iter()
        .fold(Vector3::zeros(), |acc, d| acc + d.pose_cm.translation)
        / n;
    let rotation = weighted_quaternion_mean(detections.iter().map(|d| (d.pose_cm.rotation, 1.0))).normalize();
    Ok(tag_pose_wt.compose(&Pose { rotation, translation }.inverse()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrinsicEstimate {
    pub camera_id: String,
    #[serde(with = "crate::streams::pose_json")]
    pub pose_wc: Pose<f64>,
    /// Final cost; zero for the anchor.
    pub residual: f64,
    /// Cost at the tag-derived starting pose.
    pub initial_residual: f64,
    pub paired_epochs: usize,
}

/// A pair of simultaneous in-camera gripper poses: anchor first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedEpoch {
    pub t: f64,
    pub anchor_cg: Pose<f64>,
    pub other_cg: Pose<f64>,
}

/// Cross-camera disagreement for a candidate non-anchor pose.
pub fn pairing_cost(anchor_wc: &Pose<f64>, other_wc: &Pose<f64>, pairs: &[PairedEpoch], orientation_weight: f64) -> f64 {
    pairs
        .iter()
        .map(|p| {
            let a = anchor_wc.compose(&p.anchor_cg);
            let b = other_wc.compose(&p.other_cg);
            let angle = geodesic_angle(&a.rotation, &b.rotation);
            (a.translation - b.translation).norm_squared() + orientation_weight * angle * angle
        })
        .sum()
}

/// Perturbation `init ∘ (exp(ω), t)` for the 6-vector `(t, ω)`.
pub fn perturb(init: &Pose<f64>, delta: &[f64]) -> Pose<f64> {
    let d = Pose {
        rotation: exp_so3(&Vector3::new(delta[3], delta[4], delta[5])),
        translation: Vector3::new(delta[0], delta[1], delta[2]),
    };
    init.compose(&d)
}

/// Per-camera gripper poses in the camera frame, one per epoch, time ordered.
fn camera_epochs(detections: &[&MarkerDetection], rig: &RigConfig) -> Vec<(f64, Pose<f64>)> {
    let obs: Vec<PoseObservation<f64>> = detections
        .iter()
        .map(|d| PoseObservation {
            t: d.t,
            pose_wg: gripper_pose_in_camera(d, rig).expect("gripper marker checked"),
            cov: detection_covariance(&rig.noise, d.quality),
            source: Vec::new(),
        })
        .collect();
    group_by_window(obs, rig.fusion_window)
        .iter()
        .map(|g| {
            let f = fuse_simultaneous(g).expect("non-empty group");
            (f.t, f.pose_wg)
        })
        .collect()
}

/// Nearest-neighbour pairing within `window`; every epoch is used at most once.
pub fn pair_epochs(anchor: &[(f64, Pose<f64>)], other: &[(f64, Pose<f64>)], window: f64) -> Vec<PairedEpoch> {
    let mut used = vec![false; other.len()];
    let mut pairs = Vec::new();
    let mut lo = 0;
    for (ta, pa) in anchor {
        while lo < other.len() && other[lo].0 < ta - window {
            lo += 1;
        }
        let best = (lo..other.len())
            .take_while(|&j| other[j].0 <= ta + window)
            .filter(|&j| !used[j])
            .min_by(|&i, &j| (other[i].0 - ta).abs().total_cmp(&(other[j].0 - ta).abs()));
        if let Some(j) = best {
            used[j] = true;
            pairs.push(PairedEpoch {
                t: *ta,
                anchor_cg: *pa,
                other_cg: other[j].1,
            });
        }
    }
    pairs
}

/// Tag-derived poses for every camera that sees its own tag.
pub fn tag_initial_poses(events: &[MeasurementEvent], rig: &RigConfig) -> Result<Vec<(String, Pose<f64>)>> {
    rig.cameras
        .iter()
        .map(|cam| {
            let sightings: Vec<MarkerDetection> = detections(events)
                .filter(|d| d.camera_id == cam.camera_id && d.marker_id == cam.tag_id)
                .cloned()
                .collect();
            if sightings.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "camera {:?} never detected its tag {:?}",
                    cam.camera_id, cam.tag_id
                )));
            }
            Ok((cam.camera_id.clone(), camera_pose_from_tag(&sightings, &cam.tag_pose_wt)?))
        })
        .collect()
}

fn detections(events: &[MeasurementEvent]) -> impl Iterator<Item = &MarkerDetection> {
    events.iter().filter_map(|e| match &e.measurement {
        Measurement::Detection(d) => Some(d),
        _ => None,
    })
}

/// Refines every non-anchor camera against the anchor using a calibration recording.
///
/// Returns one estimate per camera in rig order; the anchor's is its tag-derived pose.
pub fn refine_extrinsics(events: &[MeasurementEvent], rig: &RigConfig, anchor_id: &str) -> Result<Vec<ExtrinsicEstimate>> {
    let anchor = rig
        .camera(anchor_id)
        .ok_or_else(|| Error::UnknownCamera(anchor_id.to_string()))?;
    let initial = tag_initial_poses(events, rig)?;
    let init_of = |id: &str| initial.iter().find(|(c, _)| c == id).map(|(_, p)| *p).expect("one per camera");

    let gripper_dets: Vec<&MarkerDetection> = detections(events).filter(|d| is_gripper_detection(d, rig)).collect();
    let per_camera = |id: &str| {
        let dets: Vec<&MarkerDetection> = gripper_dets.iter().copied().filter(|d| d.camera_id == id).collect();
        camera_epochs(&dets, rig)
    };
    let anchor_epochs = per_camera(anchor_id);
    let anchor_wc = init_of(anchor_id);
    let weight = rig.calibration.orientation_weight;

    let mut out = Vec::with_capacity(rig.cameras.len());
    for cam in &rig.cameras {
        if cam.camera_id == anchor.camera_id {
            out.push(ExtrinsicEstimate {
                camera_id: cam.camera_id.clone(),
                pose_wc: anchor_wc,
                residual: 0.0,
                initial_residual: 0.0,
                paired_epochs: anchor_epochs.len(),
            });
            continue;
        }
        let pairs = pair_epochs(&anchor_epochs, &per_camera(&cam.camera_id), rig.calibration.pairing_window);
        if pairs.len() < MIN_PAIRED_EPOCHS {
            return Err(Error::InsufficientCalibrationData(pairs.len()));
        }
        let init = init_of(&cam.camera_id);
        let cost = |d: &[f64]| pairing_cost(&anchor_wc, &perturb(&init, d), &pairs, weight);
        let initial_residual = cost(&[0.0; 6]);
        let best = minimize_with_restarts(cost, 6, 0.05)?;
        // never hand back something worse than the tag-derived start
        let (pose_wc, residual) = if best.f <= initial_residual {
            (perturb(&init, &best.x), best.f)
        } else {
            (init, initial_residual)
        };
        log::info!(
            "refined {}: cost {initial_residual:.3e} -> {residual:.3e} over {} epochs ({} iterations)",
            cam.camera_id,
            pairs.len(),
            best.iterations
        );
        out.push(ExtrinsicEstimate {
            camera_id: cam.camera_id.clone(),
            pose_wc,
            residual,
            initial_residual,
            paired_epochs: pairs.len(),
        });
    }
    Ok(out)
}

/// Restarts the simplex around the incumbent with a shrinking step until a restart
/// stops improving. Guards against premature collapse of the simplex.
fn minimize_with_restarts(mut cost: impl FnMut(&[f64]) -> f64, dim: usize, step: f64) -> Result<Minimum<f64>> {
    let mut params = SimplexParams::with_step(vec![step; dim]);
    let mut best = nelder_mead(&mut cost, &vec![0.0; dim], &params)?;
    let mut total = best.iterations;
    for _ in 0..8 {
        for s in params.initial_step.iter_mut() {
            *s *= 0.3;
        }
        let next = nelder_mead(&mut cost, &best.x, &params)?;
        total += next.iterations;
        let gain = best.f - next.f;
        if next.f < best.f {
            best = next;
        }
        if gain <= params.tolerance {
            break;
        }
    }
    best.iterations = total;
    Ok(best)
}

/// Writes refined extrinsics into a copy of the rig.
pub fn apply_extrinsics(rig: &RigConfig, estimates: &[ExtrinsicEstimate]) -> Result<RigConfig> {
    let mut out = rig.clone();
    for e in estimates {
        out.camera_mut(&e.camera_id)
            .ok_or_else(|| Error::UnknownCamera(e.camera_id.clone()))?
            .pose_wc = e.pose_wc;
    }
    Ok(out)
}

//! Reference estimators for comparison with the filter.

use crate::ekf::{filter_inputs, Filter, FilterLog, NoiseParams};
use crate::error::{Error, Result};
use crate::markerloc::epoch_observations;
use crate::streams::{MeasurementEvent, RigConfig, Trajectory, TrajectorySample};

/// Per-epoch fused marker observations with no temporal filtering. Epochs without a
/// gripper detection are left unsampled.
pub fn marker_only(events: &[MeasurementEvent], rig: &RigConfig) -> Result<Trajectory> {
    let obs = epoch_observations(events, rig);
    if obs.is_empty() {
        return Err(Error::InvalidInput("no gripper detections".into()));
    }
    let mut traj = Trajectory::new();
    for o in obs {
        let d = o.cov.diagonal();
        traj.push(TrajectorySample {
            t: o.t,
            pose: o.pose_wg,
            cov_diag: Some([d[0], d[1], d[2], d[3], d[4], d[5]]),
        });
    }
    Ok(traj)
}

/// Dead reckoning: initialized from the first observation, then IMU propagation only.
pub fn imu_only(events: &[MeasurementEvent], rig: &RigConfig, noise: &NoiseParams) -> Result<(Trajectory, FilterLog)> {
    let mut filter = Filter::<f64>::dead_reckoning(noise, &rig.gravity);
    for input in filter_inputs(events, rig) {
        filter.process(&input)?;
    }
    if filter.state().is_none() {
        return Err(Error::InvalidInput("no gripper observation to initialize dead reckoning".into()));
    }
    Ok(filter.finish())
}

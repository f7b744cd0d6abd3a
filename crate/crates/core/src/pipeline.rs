//! End-to-end run on a synthetic demonstration: calibrate, estimate with every method,
//! segment and evaluate.

use std::fmt;
use std::str::FromStr;

use crate::baseline;
use crate::calib::{apply_extrinsics, refine_extrinsics, ExtrinsicEstimate};
use crate::ekf::{run_filter, FilterLog, NoiseParams};
use crate::error::{Error, Result};
use crate::eval::{compare_methods, error_series, Comparison, ErrorSeries, MethodReport};
use crate::segment::{segment_demo, TaskSample};
use crate::sim::{simulate, ScenarioConfig, SyntheticDemo};
use crate::streams::{MeasurementEvent, RigConfig, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Ekf,
    MarkerOnly,
    ImuOnly,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ekf, Method::MarkerOnly, Method::ImuOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ekf => "ekf",
            Method::MarkerOnly => "marker-only",
            Method::ImuOnly => "imu-only",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method {s:?} (expected ekf, marker-only or imu-only)")))
    }
}

/// Runs one estimator. Baselines without a filter return an empty log.
pub fn estimate(method: Method, events: &[MeasurementEvent], rig: &RigConfig, noise: &NoiseParams) -> Result<(Trajectory, FilterLog)> {
    match method {
        Method::Ekf => run_filter(events, rig, noise),
        Method::MarkerOnly => Ok((baseline::marker_only(events, rig)?, FilterLog::default())),
        Method::ImuOnly => baseline::imu_only(events, rig, noise),
    }
}

/// Refined rig from a calibration recording, anchored on the first camera. Without
/// calibration data the rig is returned unchanged.
pub fn calibrate(calib_events: &[MeasurementEvent], rig: &RigConfig) -> Result<(RigConfig, Vec<ExtrinsicEstimate>)> {
    if calib_events.is_empty() {
        log::warn!("no calibration recording; keeping configured extrinsics");
        return Ok((rig.clone(), Vec::new()));
    }
    let anchor = &rig.cameras[0].camera_id;
    let estimates = refine_extrinsics(calib_events, rig, anchor)?;
    Ok((apply_extrinsics(rig, &estimates)?, estimates))
}

#[derive(Debug, Clone)]
pub struct MethodResult {
    pub method: Method,
    pub trajectory: Trajectory,
    pub log: FilterLog,
    pub series: ErrorSeries,
    pub report: MethodReport,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub demo: SyntheticDemo,
    pub refined_rig: RigConfig,
    pub extrinsics: Vec<ExtrinsicEstimate>,
    pub tasks: Vec<TaskSample>,
    pub results: Vec<MethodResult>,
    pub comparison: Comparison,
}

impl PipelineOutput {
    pub fn result(&self, method: Method) -> &MethodResult {
        self.results.iter().find(|r| r.method == method).expect("every method runs")
    }
}

/// Estimation, segmentation and evaluation for an existing demo. The three estimators
/// run on separate threads; results come back in [`Method::ALL`] order.
pub fn evaluate_demo(demo: SyntheticDemo, rig: &RigConfig) -> Result<PipelineOutput> {
    let (refined_rig, extrinsics) = calibrate(&demo.calibration_events(), rig)?;
    let events = demo.events();
    let noise = refined_rig.noise.clone();
    let tasks = segment_demo(&events, &refined_rig.thresholds, &refined_rig.storage_marker_id)?;
    let gt = &demo.ground_truth.trajectory;

    let outcomes: Vec<Result<MethodResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = Method::ALL
            .into_iter()
            .map(|method| {
                let (events, rig, noise, tasks) = (&events, &refined_rig, &noise, &tasks);
                scope.spawn(move || -> Result<MethodResult> {
                    let (trajectory, log) = estimate(method, events, rig, noise)?;
                    let series = error_series(&trajectory, gt)?;
                    let report = MethodReport::new(method.as_str(), &series, tasks)?;
                    Ok(MethodResult {
                        method,
                        trajectory,
                        log,
                        series,
                        report,
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("estimator thread panicked")).collect()
    });
    let results = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let reports: Vec<MethodReport> = results.iter().map(|r| r.report.clone()).collect();
    let comparison = compare_methods(&reports)?;
    Ok(PipelineOutput {
        demo,
        refined_rig,
        extrinsics,
        tasks,
        results,
        comparison,
    })
}

/// Simulates `sc` on `rig` and runs the whole chain.
pub fn run(sc: &ScenarioConfig, rig: &RigConfig) -> Result<PipelineOutput> {
    let demo = simulate(sc, rig)?;
    evaluate_demo(demo, rig)
}

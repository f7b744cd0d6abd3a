use std::path::Path;

use anyhow::Result;
use demofuse::calib::{apply_extrinsics, refine_extrinsics};
use demofuse::ekf::NoiseParams;
use demofuse::eval::{errors_csv, error_series, MethodReport};
use demofuse::pipeline::{self, Method};
use demofuse::segment::{read_segments, segment_demo, segments_json, split_trajectory, TaskSample};
use demofuse::sim::{desk_rig, simulate, ScenarioConfig, SyntheticDemo};
use demofuse::streams::{
    load_rig_config, merge_streams, read_jsonl, to_events, GroundTruthSample, ImuSample, MarkerDetection,
    RigConfig, StreamRecord, Trajectory, WidthSample,
};
use serde_json::json;

use crate::output::{jsonl, manifest_beside, pretty, read_text, RunManifest};

pub const MANIFEST: &str = "run_manifest.json";

// stream ids used when merging files, matching the simulator's own ordering
const IMU_SOURCE: usize = 0;
const DETECTION_SOURCE: usize = 1;
const WIDTH_SOURCE: usize = 2;

fn rig_or_default(path: Option<&Path>, manifest: &mut RunManifest) -> Result<RigConfig> {
    Ok(match path {
        Some(p) => {
            manifest.input(p)?;
            load_rig_config(p)?
        }
        None => desk_rig(),
    })
}

fn load_rig(path: &Path, manifest: &mut RunManifest) -> Result<RigConfig> {
    manifest.input(path)?;
    Ok(load_rig_config(path)?)
}

fn scenario(path: Option<&Path>, seed: Option<u64>, manifest: &mut RunManifest) -> Result<ScenarioConfig> {
    let mut sc = match path {
        Some(p) => {
            manifest.input(p)?;
            ScenarioConfig::load(p)?
        }
        None => ScenarioConfig::three_apples(),
    };
    if let Some(seed) = seed {
        sc.seed = seed;
    }
    sc.validate()?;
    Ok(sc)
}

fn read_stream<R: StreamRecord>(path: &Path, manifest: &mut RunManifest) -> Result<Vec<R>> {
    let records = read_jsonl(path)?;
    manifest.input(path)?;
    Ok(records)
}

fn write_demo_files(demo: &SyntheticDemo, dir: &Path, manifest: &mut RunManifest) -> Result<()> {
    for (name, bytes) in demo.render()? {
        manifest.emit(&dir.join(name), &bytes)?;
    }
    Ok(())
}

pub fn simulate_cmd(scenario_path: Option<&Path>, rig_path: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("simulate", serde_json::Value::Null);
    let sc = scenario(scenario_path, seed, &mut manifest)?;
    let rig = rig_or_default(rig_path, &mut manifest)?;
    manifest.config = json!({ "scenario": sc, "rig": rig });

    let demo = simulate(&sc, &rig)?;
    write_demo_files(&demo, out, &mut manifest)?;
    manifest.write(&out.join(MANIFEST))?;
    log::info!("simulated {:.2} s into {}", demo.duration(), out.display());
    Ok(())
}

pub fn calibrate_cmd(rig_path: &Path, detections: &Path, anchor: Option<&str>, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("calibrate", serde_json::Value::Null);
    let rig = load_rig(rig_path, &mut manifest)?;
    let dets: Vec<MarkerDetection> = read_stream(detections, &mut manifest)?;
    let anchor = match anchor {
        Some(a) => a.to_string(),
        None => rig.cameras[0].camera_id.clone(),
    };
    manifest.config = json!({ "rig": rig, "anchor": anchor });

    let estimates = refine_extrinsics(&to_events(DETECTION_SOURCE, dets), &rig, &anchor)?;
    for e in &estimates {
        log::info!(
            "{}: residual {:.6} -> {:.6} over {} epochs",
            e.camera_id,
            e.initial_residual,
            e.residual,
            e.paired_epochs
        );
    }
    let refined = apply_extrinsics(&rig, &estimates)?;
    manifest.emit(out, (refined.to_json_pretty() + "\n").as_bytes())?;
    manifest.write(&manifest_beside(out))?;
    Ok(())
}

pub struct FuseArgs<'a> {
    pub rig: &'a Path,
    pub imu: &'a Path,
    pub detections: &'a Path,
    pub noise: Option<&'a Path>,
    pub method: Method,
    pub out: &'a Path,
    pub log: Option<&'a Path>,
}

pub fn fuse_cmd(args: FuseArgs<'_>) -> Result<()> {
    let mut manifest = RunManifest::new("fuse", serde_json::Value::Null);
    let rig = load_rig(args.rig, &mut manifest)?;
    let imu: Vec<ImuSample> = read_stream(args.imu, &mut manifest)?;
    let dets: Vec<MarkerDetection> = read_stream(args.detections, &mut manifest)?;
    let noise = match args.noise {
        Some(p) => {
            let n = NoiseParams::from_json(&read_text(p)?)?;
            manifest.input(p)?;
            n
        }
        None => rig.noise.clone(),
    };
    manifest.config = json!({ "rig": rig, "noise": noise, "method": args.method.as_str() });

    let events = merge_streams(vec![to_events(IMU_SOURCE, imu), to_events(DETECTION_SOURCE, dets)]);
    let (traj, log) = pipeline::estimate(args.method, &events, &rig, &noise)?;
    log::info!("{}: {} samples, {} accepted, {} rejected", args.method, traj.len(), log.accepted(), log.rejected());
    manifest.emit(args.out, &jsonl(traj.samples()))?;
    if let Some(path) = args.log {
        manifest.emit(path, &jsonl(&log.records))?;
    }
    manifest.write(&manifest_beside(args.out))?;
    Ok(())
}

pub fn segment_cmd(rig_path: &Path, width: &Path, detections: &Path, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("segment", serde_json::Value::Null);
    let rig = load_rig(rig_path, &mut manifest)?;
    let widths: Vec<WidthSample> = read_stream(width, &mut manifest)?;
    let dets: Vec<MarkerDetection> = read_stream(detections, &mut manifest)?;
    manifest.config = json!({ "thresholds": rig.thresholds, "storage_marker_id": rig.storage_marker_id });

    let events = merge_streams(vec![to_events(DETECTION_SOURCE, dets), to_events(WIDTH_SOURCE, widths)]);
    let tasks = segment_demo(&events, &rig.thresholds, &rig.storage_marker_id)?;
    log::info!("{} task samples", tasks.len());
    manifest.emit(out, segments_json(&tasks).as_bytes())?;
    manifest.write(&manifest_beside(out))?;
    Ok(())
}

/// errors.csv, report.json and one trajectory piece per task, all under `dir`.
fn write_evaluation(
    traj: &Trajectory,
    gt: &Trajectory,
    tasks: &[TaskSample],
    method: &str,
    dir: &Path,
    manifest: &mut RunManifest,
) -> Result<MethodReport> {
    let series = error_series(traj, gt)?;
    let report = MethodReport::new(method, &series, tasks)?;
    manifest.emit(&dir.join("errors.csv"), errors_csv(&series, tasks, method)?.as_bytes())?;
    manifest.emit(&dir.join("report.json"), &pretty(&report))?;
    for (i, part) in split_trajectory(traj, tasks).iter().enumerate() {
        manifest.emit(&dir.join(format!("task_{i}.jsonl")), &jsonl(part.samples()))?;
    }
    Ok(report)
}

pub fn evaluate_cmd(traj_path: &Path, gt_path: &Path, segments: &Path, method: &str, out_dir: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("evaluate", json!({ "method": method }));
    let traj = Trajectory::read(traj_path)?;
    manifest.input(traj_path)?;
    let gt_samples: Vec<GroundTruthSample> = read_stream(gt_path, &mut manifest)?;
    let gt = Trajectory::from_ground_truth(&gt_samples)?;
    let tasks = read_segments(segments)?;
    manifest.input(segments)?;

    let report = write_evaluation(&traj, &gt, &tasks, method, out_dir, &mut manifest)?;
    log::info!(
        "{method}: position RMSE {:.4} m over {} samples",
        report.overall.position_rmse,
        report.overall.samples
    );
    manifest.write(&out_dir.join(MANIFEST))?;
    Ok(())
}

pub fn pipeline_cmd(scenario_path: Option<&Path>, rig_path: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("pipeline", serde_json::Value::Null);
    let sc = scenario(scenario_path, seed, &mut manifest)?;
    let rig = rig_or_default(rig_path, &mut manifest)?;
    manifest.config = json!({ "scenario": sc, "rig": rig });

    let result = pipeline::run(&sc, &rig)?;
    write_demo_files(&result.demo, &out.join("sim"), &mut manifest)?;
    manifest.emit(&out.join("rig_refined.json"), (result.refined_rig.to_json_pretty() + "\n").as_bytes())?;
    manifest.emit(&out.join("calibration.json"), &pretty(&result.extrinsics))?;
    manifest.emit(&out.join("segments.json"), segments_json(&result.tasks).as_bytes())?;

    let gt = &result.demo.ground_truth.trajectory;
    for r in &result.results {
        let dir = out.join(r.method.as_str());
        manifest.emit(&dir.join("traj.jsonl"), &jsonl(r.trajectory.samples()))?;
        manifest.emit(&dir.join("log.jsonl"), &jsonl(&r.log.records))?;
        write_evaluation(&r.trajectory, gt, &result.tasks, r.method.as_str(), &dir, &mut manifest)?;
    }
    manifest.emit(&out.join("comparison.txt"), result.comparison.to_text().as_bytes())?;
    manifest.emit(&out.join("comparison.csv"), result.comparison.to_csv().as_bytes())?;
    manifest.write(&out.join(MANIFEST))?;

    if result.tasks.is_empty() {
        log::warn!("no task samples were segmented");
    }
    log::info!("{} tasks, outputs in {}", result.tasks.len(), out.display());
    Ok(())
}

//! `demofuse` command-line tool.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use demofuse::pipeline::Method;

#[derive(Debug, Parser)]
#[command(name = "demofuse", version, about = "Gripper pose fusion and task segmentation for hand-held demonstrations")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic demonstration with ground truth
    Simulate {
        /// Scenario JSON; the built-in three-apple scenario when omitted
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Rig JSON used as the true scene; the built-in desk rig when omitted
        #[arg(long)]
        rig: Option<PathBuf>,
        /// Overrides the scenario seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Refine camera extrinsics from a calibration recording
    Calibrate {
        #[arg(long)]
        rig: PathBuf,
        #[arg(long)]
        detections: PathBuf,
        /// Camera held fixed; the first camera in the rig when omitted
        #[arg(long)]
        anchor: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the gripper trajectory
    Fuse {
        #[arg(long)]
        rig: PathBuf,
        #[arg(long)]
        imu: PathBuf,
        #[arg(long)]
        detections: PathBuf,
        /// Noise parameters JSON; the rig's own noise block when omitted
        #[arg(long)]
        noise: Option<PathBuf>,
        #[arg(long, default_value = "ekf", value_parser = parse_method)]
        method: Method,
        #[arg(long)]
        out: PathBuf,
        /// Per-observation filter log
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Split a demonstration into task samples
    Segment {
        #[arg(long)]
        rig: PathBuf,
        #[arg(long)]
        width: PathBuf,
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a trajectory against ground truth, per task
    Evaluate {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        segments: PathBuf,
        /// Label used in errors.csv and report.json
        #[arg(long, default_value = "estimate")]
        method: String,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Simulate, calibrate, fuse with every method, segment and evaluate
    Pipeline {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        rig: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: demofuse::Error| e.to_string())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate { scenario, rig, seed, out } => commands::simulate_cmd(scenario.as_deref(), rig.as_deref(), seed, &out),
        Command::Calibrate { rig, detections, anchor, out } => commands::calibrate_cmd(&rig, &detections, anchor.as_deref(), &out),
        Command::Fuse { rig, imu, detections, noise, method, out, log } => commands::fuse_cmd(commands::FuseArgs {
            rig: &rig,
            imu: &imu,
            detections: &detections,
            noise: noise.as_deref(),
            method,
            out: &out,
            log: log.as_deref(),
        }),
        Command::Segment { rig, width, detections, out } => commands::segment_cmd(&rig, &width, &detections, &out),
        Command::Evaluate { traj, gt, segments, method, out_dir } => commands::evaluate_cmd(&traj, &gt, &segments, &method, &out_dir),
        Command::Pipeline { scenario, rig, seed, out } => commands::pipeline_cmd(scenario.as_deref(), rig.as_deref(), seed, &out),
    }
}

/// 2 for anything that failed on the filesystem, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|cause| {
        cause.downcast_ref::<std::io::Error>().is_some() || cause.downcast_ref::<demofuse::Error>().is_some_and(|e| e.is_io())
    });
    if io {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! Trajectory errors against ground truth, per-task summaries and method comparison.
//!
//! Each estimated sample is compared with the ground truth interpolated at its
//! timestamp (linear in translation, spherical in rotation). No alignment is applied:
//! every method shares the tag-anchored world frame.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::geodesic_angle;
use crate::segment::{task_index_at, TaskSample};
use crate::streams::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPoint {
    pub t: f64,
    /// Euclidean distance (m).
    pub position: f64,
    /// Geodesic angle (rad).
    pub orientation: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorSeries {
    pub points: Vec<ErrorPoint>,
    /// Estimated samples outside the ground-truth time range.
    pub skipped: usize,
}

impl ErrorSeries {
    /// Points whose timestamps appear in `times` (both sorted ascending).
    pub fn restricted_to(&self, times: &[f64]) -> ErrorSeries {
        let points = self
            .points
            .iter()
            .filter(|p| times.binary_search_by(|t| t.total_cmp(&p.t)).is_ok())
            .copied()
            .collect();
        ErrorSeries { points, skipped: 0 }
    }

    pub fn in_window(&self, t0: f64, t1: f64) -> impl Iterator<Item = &ErrorPoint> {
        self.points.iter().filter(move |p| p.t >= t0 && p.t <= t1)
    }
}

/// Errors of `traj` against `gt` interpolated at each sample time.
pub fn error_series(traj: &Trajectory, gt: &Trajectory) -> Result<ErrorSeries> {
    let mut series = ErrorSeries::default();
    for s in traj.samples() {
        match gt.interpolate(s.t) {
            Some(truth) => series.points.push(ErrorPoint {
                t: s.t,
                position: (s.pose.translation - truth.translation).norm(),
                orientation: geodesic_angle(&s.pose.rotation, &truth.rotation),
            }),
            None => series.skipped += 1,
        }
    }
    if series.points.is_empty() {
        return Err(Error::InvalidInput("trajectory and ground truth do not overlap in time".into()));
    }
    Ok(series)
}

/// RMSE and maximum of both error components.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub samples: usize,
    pub position_rmse: f64,
    pub position_max: f64,
    pub orientation_rmse: f64,
    pub orientation_max: f64,
}

impl ErrorStats {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a ErrorPoint>) -> Self {
        let mut s = ErrorStats::default();
        let (mut sp, mut so) = (0.0, 0.0);
        for p in points {
            s.samples += 1;
            sp += p.position * p.position;
            so += p.orientation * p.orientation;
            s.position_max = s.position_max.max(p.position);
            s.orientation_max = s.orientation_max.max(p.orientation);
        }
        if s.samples > 0 {
            s.position_rmse = (sp / s.samples as f64).sqrt();
            s.orientation_rmse = (so / s.samples as f64).sqrt();
        }
        s
    }

    fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::PositionRmse => self.position_rmse,
            Metric::PositionMax => self.position_max,
            Metric::OrientationRmse => self.orientation_rmse,
            Metric::OrientationMax => self.orientation_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task_index: usize,
    #[serde(flatten)]
    pub stats: ErrorStats,
}

/// Splits the series by task. Tasks with no points get an empty (zero-sample) report.
pub fn per_task_report(series: &ErrorSeries, tasks: &[TaskSample]) -> Result<Vec<TaskReport>> {
    let mut buckets: Vec<Vec<ErrorPoint>> = vec![Vec::new(); tasks.len()];
    for p in &series.points {
        let i = task_index_at(tasks, p.t)
            .ok_or_else(|| Error::InvalidInput(format!("error sample at t = {} lies outside every task", p.t)))?;
        buckets[i].push(*p);
    }
    Ok(buckets
        .iter()
        .enumerate()
        .map(|(i, b)| TaskReport {
            task_index: i,
            stats: ErrorStats::from_points(b),
        })
        .collect())
}

/// Everything written to `report.json` for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub tasks: Vec<TaskReport>,
    pub overall: ErrorStats,
    pub skipped: usize,
}

impl MethodReport {
    pub fn new(method: &str, series: &ErrorSeries, tasks: &[TaskSample]) -> Result<Self> {
        Ok(Self {
            method: method.to_string(),
            tasks: per_task_report(series, tasks)?,
            overall: ErrorStats::from_points(&series.points),
            skipped: series.skipped,
        })
    }
}

/// CSV with columns `t,pos_err_m,ori_err_rad,task_index,method`.
pub fn errors_csv(series: &ErrorSeries, tasks: &[TaskSample], method: &str) -> Result<String> {
    let mut out = String::from("t,pos_err_m,ori_err_rad,task_index,method\n");
    for p in &series.points {
        let i = task_index_at(tasks, p.t)
            .ok_or_else(|| Error::InvalidInput(format!("error sample at t = {} lies outside every task", p.t)))?;
        writeln!(out, "{},{},{},{},{}", p.t, p.position, p.orientation, i, method).expect("writing to string");
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    PositionRmse,
    PositionMax,
    OrientationRmse,
    OrientationMax,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::PositionRmse, Metric::PositionMax, Metric::OrientationRmse, Metric::OrientationMax];

    pub fn name(self) -> &'static str {
        match self {
            Metric::PositionRmse => "pos_rmse_m",
            Metric::PositionMax => "pos_max_m",
            Metric::OrientationRmse => "ori_rmse_rad",
            Metric::OrientationMax => "ori_max_rad",
        }
    }
}

/// One line of the comparison: a task (or the overall row) and one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    /// `None` for the overall row.
    pub task_index: Option<usize>,
    pub metric: Metric,
    /// Per method, in input order; `None` when the method has no samples there.
    pub values: Vec<Option<f64>>,
    /// Indices of the methods with the lowest value; ties are all flagged.
    pub best: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub methods: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

pub fn compare_methods(reports: &[MethodReport]) -> Result<Comparison> {
    let Some(first) = reports.first() else {
        return Err(Error::InvalidInput("no method reports to compare".into()));
    };
    let n_tasks = first.tasks.len();
    if let Some(r) = reports.iter().find(|r| r.tasks.len() != n_tasks) {
        return Err(Error::InvalidInput(format!(
            "method {} has {} tasks, {} has {n_tasks}",
            r.method,
            r.tasks.len(),
            first.method
        )));
    }
    let mut rows = Vec::new();
    let groups = (0..n_tasks).map(Some).chain(std::iter::once(None));
    for task in groups {
        let stats: Vec<ErrorStats> = reports
            .iter()
            .map(|r| match task {
                Some(i) => r.tasks[i].stats,
                None => r.overall,
            })
            .collect();
        for metric in Metric::ALL {
            let values: Vec<Option<f64>> = stats.iter().map(|s| (s.samples > 0).then(|| s.metric(metric))).collect();
            let min = values.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            let best = values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v == Some(min))
                .map(|(i, _)| i)
                .collect();
            rows.push(ComparisonRow {
                task_index: task,
                metric,
                values,
                best,
            });
        }
    }
    Ok(Comparison {
        methods: reports.iter().map(|r| r.method.clone()).collect(),
        rows,
    })
}

impl ComparisonRow {
    fn label(&self) -> String {
        match self.task_index {
            Some(i) => format!("task {i}"),
            None => "overall".to_string(),
        }
    }
}

impl Comparison {
    pub fn is_best(&self, method: &str, task_index: Option<usize>, metric: Metric) -> bool {
        let Some(m) = self.methods.iter().position(|x| x == method) else {
            return false;
        };
        self.rows
            .iter()
            .any(|r| r.task_index == task_index && r.metric == metric && r.best.contains(&m))
    }

    /// Fixed-width table; the best value in each row carries a `*`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{:<8} {:<13}", "row", "metric");
        for m in &self.methods {
            write!(out, " {m:>14}").unwrap();
        }
        out.push('\n');
        for r in &self.rows {
            write!(out, "{:<8} {:<13}", r.label(), r.metric.name()).unwrap();
            for (i, v) in r.values.iter().enumerate() {
                let cell = match v {
                    Some(v) if r.best.contains(&i) => format!("{v:.6}*"),
                    Some(v) => format!("{v:.6} "),
                    None => "- ".to_string(),
                };
                write!(out, " {cell:>14}").unwrap();
            }
            out.push('\n');
        }
        out.push_str("* best (lowest) value in the row\n");
        out
    }

    /// Columns: row, metric, one value column per method, then `best` (methods joined by `;`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,metric");
        for m in &self.methods {
            write!(out, ",{m}").unwrap();
        }
        out.push_str(",best\n");
        for r in &self.rows {
            write!(out, "{},{}", r.label(), r.metric.name()).unwrap();
            for v in &r.values {
                match v {
                    Some(v) => write!(out, ",{v}").unwrap(),
                    None => out.push(','),
                }
            }
            let best: Vec<&str> = r.best.iter().map(|&i| self.methods[i].as_str()).collect();
            writeln!(out, ",{}", best.join(";")).unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Quat;
    use crate::segment::EndReason;
    use crate::streams::TrajectorySample;
    use crate::{Pose, Vec3};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn line(offset: Vec3, n: usize) -> Trajectory {
        Trajectory::from_samples(
            (0..n)
                .map(|k| {
                    let t = k as f64 * 0.1;
                    TrajectorySample {
                        t,
                        pose: Pose::new(Quat::from_axis_angle(&Vec3::z(), 0.1 * t), Vec3::new(t, 0.0, 0.0) + offset),
                        cov_diag: None,
                    }
                })
                .collect(),
        )
        .unwrap()
    }

    fn task(i: usize, t0: f64, t1: f64) -> TaskSample {
        TaskSample {
            index: i,
            t_start: t0,
            t_end: t1,
            end_reason: EndReason::StreamEnd,
            boundary_t: t1,
        }
    }

    #[test]
    fn identical_trajectory_has_zero_error() {
        let gt = line(Vec3::zeros(), 20);
        let s = error_series(&gt, &gt).unwrap();
        assert!(s.points.iter().all(|p| p.position == 0.0 && p.orientation == 0.0));
    }

    #[test]
    fn constant_offset() {
        let gt = line(Vec3::zeros(), 20);
        let s = error_series(&line(Vec3::new(0.01, 0.0, 0.0), 20), &gt).unwrap();
        for p in &s.points {
            assert_abs_diff_eq!(p.position, 0.01, epsilon = 1e-12);
            assert_abs_diff_eq!(p.orientation, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn midpoint_interpolation() {
        let gt = Trajectory::from_samples(vec![
            TrajectorySample { t: 0.0, pose: Pose::identity(), cov_diag: None },
            TrajectorySample { t: 1.0, pose: Pose::from_translation(Vec3::new(0.02, 0.0, 0.0)), cov_diag: None },
        ])
        .unwrap();
        let traj = Trajectory::from_samples(vec![
            TrajectorySample { t: 0.5, pose: Pose::from_translation(Vec3::new(0.01, 0.0, 0.0)), cov_diag: None },
            TrajectorySample { t: 2.0, pose: Pose::identity(), cov_diag: None },
        ])
        .unwrap();
        let s = error_series(&traj, &gt).unwrap();
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.skipped, 1);
        assert_abs_diff_eq!(s.points[0].position, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn no_overlap_is_error() {
        let gt = line(Vec3::zeros(), 5);
        let late = Trajectory::from_samples(vec![TrajectorySample { t: 10.0, pose: Pose::identity(), cov_diag: None }]).unwrap();
        assert!(error_series(&late, &gt).is_err());
    }

    fn pts(v: &[(f64, f64)]) -> ErrorSeries {
        ErrorSeries {
            points: v.iter().map(|&(t, e)| ErrorPoint { t, position: e, orientation: e / 10.0 }).collect(),
            skipped: 0,
        }
    }

    #[test]
    fn task_reports() {
        let s = pts(&[(0.0, 0.01), (0.5, 0.01), (1.0, 0.03), (1.5, 0.03)]);
        let one = per_task_report(&s, &[task(0, 0.0, 2.0)]).unwrap();
        assert_abs_diff_eq!(one[0].stats.position_rmse, 0.0005f64.sqrt(), epsilon = 1e-15);
        let two = per_task_report(&s, &[task(0, 0.0, 1.0), task(1, 1.0, 2.0)]).unwrap();
        assert_abs_diff_eq!(two[0].stats.position_rmse, 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(two[1].stats.position_rmse, 0.03, epsilon = 1e-15);
        assert_eq!(two[1].stats.position_max, 0.03);

        let c = pts(&[(0.0, 0.02), (1.0, 0.02), (2.0, 0.02)]);
        let three = per_task_report(&c, &[task(0, 0.0, 1.0), task(1, 1.0, 2.0), task(2, 2.0, 3.0)]).unwrap();
        assert!(three.iter().all(|r| (r.stats.position_rmse - 0.02).abs() < 1e-15));

        assert!(per_task_report(&pts(&[(5.0, 0.1)]), &[task(0, 0.0, 1.0)]).is_err());
    }

    fn report(name: &str, errs: &[f64]) -> MethodReport {
        let s = pts(&errs.iter().enumerate().map(|(i, e)| (i as f64, *e)).collect::<Vec<_>>());
        let tasks: Vec<TaskSample> = (0..errs.len()).map(|i| task(i, i as f64, i as f64 + 1.0)).collect();
        MethodReport::new(name, &s, &tasks).unwrap()
    }

    #[test]
    fn comparison_flags_best_and_ties() {
        let single = compare_methods(&[report("a", &[0.1, 0.2])]).unwrap();
        assert!(single.rows.iter().all(|r| r.best == vec![0]));
        assert_eq!(single.rows.len(), 3 * 4);

        let c = compare_methods(&[report("a", &[0.1, 0.2]), report("b", &[0.3, 0.4])]).unwrap();
        assert!(c.rows.iter().all(|r| r.best == vec![0]));
        assert!(c.is_best("a", None, Metric::PositionRmse));

        let tie = compare_methods(&[report("a", &[0.1]), report("b", &[0.1])]).unwrap();
        assert!(tie.rows.iter().all(|r| r.best == vec![0, 1]));
        assert!(tie.to_text().contains('*'));
        assert!(tie.to_csv().lines().nth(1).unwrap().ends_with("a;b"));

        assert!(compare_methods(&[report("a", &[0.1]), report("b", &[0.1, 0.2])]).is_err());
    }

    #[test]
    fn csv_columns() {
        let s = pts(&[(0.0, 0.01)]);
        let csv = errors_csv(&s, &[task(0, 0.0, 1.0)], "ekf").unwrap();
        assert_eq!(csv, "t,pos_err_m,ori_err_rad,task_index,method\n0,0.01,0.001,0,ekf\n");
    }

    proptest! {
        #[test]
        fn rigid_transform_leaves_errors_unchanged(
            ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in 0.1f64..1.0, angle in -3.0f64..3.0,
            tx in -5.0f64..5.0, ty in -5.0f64..5.0, tz in -5.0f64..5.0,
        ) {
            let w = Pose::new(Quat::from_axis_angle(&Vec3::new(ax, ay, az), angle), Vec3::new(tx, ty, tz));
            let gt = line(Vec3::zeros(), 10);
            let est = line(Vec3::new(0.01, -0.02, 0.005), 10);
            let moved = |tr: &Trajectory| Trajectory::from_samples(
                tr.samples().iter().map(|s| TrajectorySample { pose: w.compose(&s.pose), ..s.clone() }).collect()
            ).unwrap();
            let a = error_series(&est, &gt).unwrap();
            let b = error_series(&moved(&est), &moved(&gt)).unwrap();
            for (p, q) in a.points.iter().zip(&b.points) {
                prop_assert!((p.position - q.position).abs() < 1e-9);
                prop_assert!((p.orientation - q.orientation).abs() < 1e-9);
            }
        }

        #[test]
        fn max_at_least_rmse(errs in proptest::collection::vec(0.0f64..1.0, 1..50)) {
            let s = pts(&errs.iter().enumerate().map(|(i, e)| (i as f64, *e)).collect::<Vec<_>>());
            let st = ErrorStats::from_points(&s.points);
            prop_assert!(st.position_max >= st.position_rmse - 1e-15);
            prop_assert!(st.position_rmse >= 0.0);
        }
    }
}

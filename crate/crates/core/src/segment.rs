//! Splitting one continuous demonstration into task samples.
//!
//! A task ends when the gripper has released its fruit and then moved away from the
//! storage location. Two signals drive this:
//!
//! * gripper width: opening above `release_threshold` after having been closed arms
//!   the departure check;
//! * on-board distance to the storage marker: once armed, a reading beyond
//!   `leave_distance + leave_hysteresis` ends the task at that reading's time.
//!
//! If the storage marker drops out of view while the gripper is still near it, the
//! task ends `detection_gap_timeout` seconds after the last sighting.
//!
//! ```text
//!            width > release (latched closed)
//!  SEEKING ───────────────────────────────────▶ AWAITING
//!  RELEASE ◀─────────────────────────────────── DEPARTURE
//!            distance > leave + hysteresis  → boundary (left_storage)
//!            no sighting for timeout        → boundary (gap_timeout)
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markerloc::storage_marker_distance;
use crate::streams::{Measurement, MeasurementEvent, Trajectory, ONBOARD_CAMERA_ID};

/// Thresholds for the two event conditions.
///
/// Defaults: fruit 7 cm, open 10 cm, release threshold midway (8.5 cm), grasp threshold
/// equal to the fruit size, 2 mm width hysteresis, leave distance 25 cm with 2 cm
/// hysteresis, 1 s detection gap timeout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSegmenterConfig")]
pub struct SegmenterConfig {
    pub max_fruit_width: f64,
    pub max_open_width: f64,
    pub release_threshold: f64,
    pub grasp_threshold: f64,
    pub width_hysteresis: f64,
    pub leave_distance: f64,
    pub leave_hysteresis: f64,
    pub detection_gap_timeout: f64,
}

impl SegmenterConfig {
    /// Builds a config from the two physical widths and the leave distance, defaulting the rest.
    pub fn from_widths(max_fruit_width: f64, max_open_width: f64, leave_distance: f64) -> Result<Self> {
        RawSegmenterConfig {
            max_fruit_width: Some(max_fruit_width),
            max_open_width: Some(max_open_width),
            leave_distance: Some(leave_distance),
            ..Default::default()
        }
        .try_into()
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.max_fruit_width,
            self.max_open_width,
            self.release_threshold,
            self.grasp_threshold,
            self.width_hysteresis,
            self.leave_distance,
            self.leave_hysteresis,
            self.detection_gap_timeout,
        ];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("segmenter thresholds must be finite and non-negative".into()));
        }
        if !(self.grasp_threshold < self.release_threshold && self.release_threshold <= self.max_open_width) {
            return Err(Error::Config(format!(
                "segmenter thresholds need grasp_threshold < release_threshold <= max_open_width (got {} / {} / {})",
                self.grasp_threshold, self.release_threshold, self.max_open_width
            )));
        }
        if self.leave_distance <= 0.0 {
            return Err(Error::Config("leave_distance must be positive".into()));
        }
        if self.detection_gap_timeout <= 0.0 {
            return Err(Error::Config("detection_gap_timeout must be positive".into()));
        }
        Ok(())
    }
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        RawSegmenterConfig::default()
            .try_into()
            .expect("default segmenter config is valid")
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegmenterConfig {
    max_fruit_width: Option<f64>,
    max_open_width: Option<f64>,
    release_threshold: Option<f64>,
    grasp_threshold: Option<f64>,
    width_hysteresis: Option<f64>,
    leave_distance: Option<f64>,
    leave_hysteresis: Option<f64>,
    detection_gap_timeout: Option<f64>,
}

impl TryFrom<RawSegmenterConfig> for SegmenterConfig {
    type Error = Error;

    fn try_from(raw: RawSegmenterConfig) -> Result<Self> {
        let max_fruit_width = raw.max_fruit_width.unwrap_or(0.07);
        let max_open_width = raw.max_open_width.unwrap_or(0.10);
        let cfg = SegmenterConfig {
            max_fruit_width,
            max_open_width,
            release_threshold: raw.release_threshold.unwrap_or(0.5 * (max_fruit_width + max_open_width)),
            grasp_threshold: raw.grasp_threshold.unwrap_or(max_fruit_width),
            width_hysteresis: raw.width_hysteresis.unwrap_or(0.002),
            leave_distance: raw.leave_distance.unwrap_or(0.25),
            leave_hysteresis: raw.leave_hysteresis.unwrap_or(0.02),
            detection_gap_timeout: raw.detection_gap_timeout.unwrap_or(1.0),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    LeftStorage,
    GapTimeout,
    StreamEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSample {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub end_reason: EndReason,
    /// When the end condition fired. Equals `t_end` unless trailing idle time was appended.
    pub boundary_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Phase {
    #[default]
    SeekingRelease,
    AwaitingDeparture,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SegmenterState {
    pub phase: Phase,
    /// Set once width has been below `release_threshold - width_hysteresis`; consumed on release.
    pub closed_latch: bool,
    pub armed_at: Option<f64>,
    /// Time and distance of the most recent storage-marker sighting.
    pub last_storage: Option<(f64, f64)>,
    /// Most recent time the width was at or below `grasp_threshold`.
    pub last_grasp: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundary {
    pub t: f64,
    pub reason: EndReason,
}

/// One transition of the segmentation state machine. Events that are neither width
/// samples nor on-board sightings of the storage marker only advance the gap timer.
pub fn step(
    state: &SegmenterState,
    event: &MeasurementEvent,
    cfg: &SegmenterConfig,
    storage_marker_id: &str,
) -> (SegmenterState, Option<Boundary>) {
    let mut s = *state;
    let t = event.t();
    let mut boundary = None;

    if s.phase == Phase::AwaitingDeparture {
        if let (Some(armed), Some((seen_t, seen_d))) = (s.armed_at, s.last_storage) {
            let deadline = seen_t.max(armed) + cfg.detection_gap_timeout;
            if seen_d <= cfg.leave_distance && t >= deadline {
                boundary = Some(Boundary {
                    t: deadline,
                    reason: EndReason::GapTimeout,
                });
                disarm(&mut s);
            }
        }
    }

    match &event.measurement {
        Measurement::Width(w) => {
            if w.width < cfg.release_threshold - cfg.width_hysteresis {
                s.closed_latch = true;
            }
            if w.width <= cfg.grasp_threshold {
                s.last_grasp = Some(t);
            }
            if s.phase == Phase::SeekingRelease && s.closed_latch && w.width > cfg.release_threshold {
                s.phase = Phase::AwaitingDeparture;
                s.armed_at = Some(t);
                s.closed_latch = false;
            }
        }
        Measurement::Detection(d) if d.camera_id == ONBOARD_CAMERA_ID && d.marker_id == storage_marker_id => {
            let distance = storage_marker_distance(d, storage_marker_id).expect("marker id checked");
            s.last_storage = Some((t, distance));
            if s.phase == Phase::AwaitingDeparture
                && boundary.is_none()
                && distance > cfg.leave_distance + cfg.leave_hysteresis
            {
                boundary = Some(Boundary {
                    t,
                    reason: EndReason::LeftStorage,
                });
                disarm(&mut s);
            }
        }
        _ => {}
    }
    (s, boundary)
}

fn disarm(s: &mut SegmenterState) {
    s.phase = Phase::SeekingRelease;
    s.armed_at = None;
}

/// Folds [`step`] over a merged event stream and tiles the demo into task samples.
///
/// The first sample starts at the first event. Whatever follows the last boundary
/// becomes a final `stream_end` sample if the gripper closed during it; otherwise it is
/// idle time and extends the preceding sample to the last event.
pub fn segment_demo(events: &[MeasurementEvent], cfg: &SegmenterConfig, storage_marker_id: &str) -> Result<Vec<TaskSample>> {
    let (first, last) = match (events.first(), events.last()) {
        (Some(f), Some(l)) => (f.t(), l.t()),
        _ => return Err(Error::InvalidInput("cannot segment an empty event stream".into())),
    };
    if !events.iter().any(|e| matches!(e.measurement, Measurement::Width(_))) {
        return Err(Error::InvalidInput("segmentation needs a gripper width stream".into()));
    }
    if last <= first {
        return Err(Error::InvalidInput("demo spans no time".into()));
    }

    let mut state = SegmenterState::default();
    let mut samples = Vec::new();
    let mut start = first;
    for e in events {
        let (next, boundary) = step(&state, e, cfg, storage_marker_id);
        state = next;
        if let Some(b) = boundary {
            if b.t > start {
                samples.push(TaskSample {
                    index: samples.len(),
                    t_start: start,
                    t_end: b.t,
                    end_reason: b.reason,
                    boundary_t: b.t,
                });
                start = b.t;
            }
        }
    }
    if last > start {
        // Idle time after the final departure (no grasp since the last boundary) is
        // not a task of its own; it extends the last sample to the end of the demo.
        let idle = state.phase == Phase::SeekingRelease && !state.closed_latch;
        match samples.last_mut() {
            Some(prev) if idle => prev.t_end = last,
            _ => samples.push(TaskSample {
                index: samples.len(),
                t_start: start,
                t_end: last,
                end_reason: EndReason::StreamEnd,
                boundary_t: last,
            }),
        }
    }
    Ok(samples)
}

/// Index of the task containing `t`. Tasks own `[t_start, t_end)`; the last one also owns its end.
pub fn task_index_at(tasks: &[TaskSample], t: f64) -> Option<usize> {
    let i = tasks.partition_point(|s| s.t_end <= t);
    match tasks.get(i) {
        Some(s) if s.t_start <= t => Some(i),
        _ => match tasks.last() {
            Some(s) if s.t_end == t => Some(tasks.len() - 1),
            _ => None,
        },
    }
}

/// Cuts a trajectory into one piece per task.
pub fn split_trajectory(traj: &Trajectory, tasks: &[TaskSample]) -> Vec<Trajectory> {
    let mut parts: Vec<Vec<_>> = vec![Vec::new(); tasks.len()];
    for s in traj.samples() {
        if let Some(i) = task_index_at(tasks, s.t) {
            parts[i].push(s.clone());
        }
    }
    parts
        .into_iter()
        .map(|p| Trajectory::from_samples(p).expect("subsequence of an ordered trajectory"))
        .collect()
}

/// Pretty JSON array with a trailing newline, as written by [`write_segments`].
pub fn segments_json(tasks: &[TaskSample]) -> String {
    serde_json::to_string_pretty(tasks).expect("segments serialize") + "\n"
}

pub fn write_segments(tasks: &[TaskSample], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, segments_json(tasks)).map_err(|e| Error::io(path, e))
}

pub fn read_segments(path: impl AsRef<Path>) -> Result<Vec<TaskSample>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let tasks: Vec<TaskSample> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    for (i, w) in tasks.windows(2).enumerate() {
        if w[0].t_end != w[1].t_start {
            return Err(Error::InvalidInput(format!("segments {i} and {} do not tile", i + 1)));
        }
    }
    if tasks.iter().any(|s| !(s.t_start < s.t_end)) {
        return Err(Error::InvalidInput("segment with t_start >= t_end".into()));
    }
    if tasks.iter().any(|s| !(s.t_start < s.boundary_t && s.boundary_t <= s.t_end)) {
        return Err(Error::InvalidInput("segment boundary_t outside (t_start, t_end]".into()));
    }
    Ok(tasks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::{ImuSample, MarkerDetection, WidthSample};
    use crate::{Pose, Vec3};

    const STORAGE: &str = "storage";

    fn width(t: f64, w: f64) -> MeasurementEvent {
        MeasurementEvent::new(2, WidthSample { t, width: w }.into())
    }

    fn storage(t: f64, d: f64) -> MeasurementEvent {
        MeasurementEvent::new(
            1,
            MarkerDetection {
                t,
                camera_id: ONBOARD_CAMERA_ID.into(),
                marker_id: STORAGE.into(),
                pose_cm: Pose::from_translation(Vec3::new(0.0, 0.0, d)),
                quality: 0.0,
            }
            .into(),
        )
    }

    fn imu(t: f64) -> MeasurementEvent {
        MeasurementEvent::new(
            0,
            ImuSample {
                t,
                gyro: Vec3::zeros(),
                accel: Vec3::new(0.0, 0.0, 9.81),
            }
            .into(),
        )
    }

    fn cfg() -> SegmenterConfig {
        SegmenterConfig::default()
    }

    fn boundaries(events: &[MeasurementEvent], cfg: &SegmenterConfig) -> Vec<Boundary> {
        let mut s = SegmenterState::default();
        let mut out = Vec::new();
        for e in events {
            let (n, b) = step(&s, e, cfg, STORAGE);
            s = n;
            out.extend(b);
        }
        out
    }

    #[test]
    fn defaults_follow_widths() {
        let c = cfg();
        assert_eq!(c.release_threshold, 0.085);
        assert_eq!(c.grasp_threshold, 0.07);
        assert!(SegmenterConfig::from_widths(0.1, 0.08, 0.2).is_err());
    }

    #[test]
    fn closed_width_never_segments() {
        let events: Vec<_> = (0..100).map(|i| width(i as f64 * 0.1, 0.05)).collect();
        assert!(boundaries(&events, &cfg()).is_empty());
    }

    #[test]
    fn departure_after_release() {
        // Hand trace: closed until 10, open at 10 (arms), storage distance 0.1 near, then 0.3 at 11.2.
        let mut events = vec![width(9.0, 0.06), width(9.5, 0.06), width(10.0, 0.1)];
        events.push(storage(10.5, 0.1));
        events.push(storage(11.0, 0.2));
        events.push(storage(11.2, 0.3));
        events.push(storage(11.5, 0.4));
        let b = boundaries(&events, &cfg());
        assert_eq!(b, vec![Boundary { t: 11.2, reason: EndReason::LeftStorage }]);
    }

    #[test]
    fn occluded_storage_marker_times_out() {
        let mut events = vec![width(9.0, 0.06), width(10.0, 0.1), storage(10.3, 0.1)];
        events.extend((0..30).map(|i| width(10.4 + i as f64 * 0.1, 0.1)));
        let b = boundaries(&events, &cfg());
        assert_eq!(b.len(), 1);
        assert!((b[0].t - 11.3).abs() < 1e-12);
        assert_eq!(b[0].reason, EndReason::GapTimeout);
    }

    #[test]
    fn far_marker_before_release_does_not_trigger() {
        let events = vec![storage(1.0, 0.9), width(2.0, 0.06), storage(2.5, 0.9)];
        assert!(boundaries(&events, &cfg()).is_empty());
    }

    #[test]
    fn chatter_near_threshold_arms_once() {
        let c = cfg();
        let r = c.release_threshold;
        let events = vec![
            width(0.0, 0.06),
            width(1.0, r + 0.001),
            width(1.1, r - 0.001), // within hysteresis: latch stays clear
            width(1.2, r + 0.001),
            storage(2.0, 0.5),
            width(2.1, r - 0.001),
            width(2.2, r + 0.001),
            storage(3.0, 0.5),
        ];
        let b = boundaries(&events, &c);
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].t, 2.0);
    }

    #[test]
    fn always_open_is_single_sample() {
        let events: Vec<_> = (0..50)
            .flat_map(|i| [width(i as f64 * 0.2, 0.1), storage(i as f64 * 0.2 + 0.1, 0.5)])
            .collect();
        let tasks = segment_demo(&events, &cfg(), STORAGE).unwrap();
        assert_eq!(tasks.len(), 1);
        assert_eq!(tasks[0].t_start, 0.0);
        assert_eq!(tasks[0].t_end, events.last().unwrap().t());
        assert_eq!(tasks[0].end_reason, EndReason::StreamEnd);
    }

    #[test]
    fn one_pick_with_idle_tail() {
        let events = vec![
            width(0.0, 0.1),
            width(1.0, 0.06),
            width(2.0, 0.1),
            storage(2.5, 0.15),
            storage(3.0, 0.4),
            width(3.5, 0.1),
            width(5.0, 0.1),
        ];
        let tasks = segment_demo(&events, &cfg(), STORAGE).unwrap();
        assert_eq!(tasks.len(), 1);
        assert_eq!((tasks[0].t_start, tasks[0].t_end), (0.0, 5.0));
        assert_eq!(tasks[0].end_reason, EndReason::LeftStorage);
        assert_eq!(tasks[0].boundary_t, 3.0);

        // a second grasp after the departure is a task in progress
        let mut events = events;
        events.push(width(6.0, 0.06));
        let tasks = segment_demo(&events, &cfg(), STORAGE).unwrap();
        assert_eq!(tasks.len(), 2);
        assert_eq!(tasks[0].t_end, 3.0);
        assert_eq!(tasks[1].end_reason, EndReason::StreamEnd);
    }

    #[test]
    fn empty_stream_is_error() {
        assert!(segment_demo(&[], &cfg(), STORAGE).is_err());
        assert!(segment_demo(&[imu(0.0), imu(1.0)], &cfg(), STORAGE).is_err());
    }

    #[test]
    fn task_lookup_half_open() {
        let tasks = vec![
            TaskSample { index: 0, t_start: 0.0, t_end: 1.0, end_reason: EndReason::LeftStorage, boundary_t: 1.0 },
            TaskSample { index: 1, t_start: 1.0, t_end: 2.0, end_reason: EndReason::StreamEnd, boundary_t: 2.0 },
        ];
        assert_eq!(task_index_at(&tasks, 0.0), Some(0));
        assert_eq!(task_index_at(&tasks, 1.0), Some(1));
        assert_eq!(task_index_at(&tasks, 2.0), Some(1));
        assert_eq!(task_index_at(&tasks, 2.5), None);
        assert_eq!(task_index_at(&tasks, -0.1), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        // Randomized pick-and-place script: closed, opened, near storage, departed.
        fn script() -> impl Strategy<Value = Vec<MeasurementEvent>> {
            proptest::collection::vec((0.5..3.0f64, 0.3..2.0f64, 0.0..1.0f64, any::<bool>()), 1..5).prop_map(|picks| {
                let mut t = 0.0;
                let mut ev = Vec::new();
                for (hold, dwell, jitter, occluded) in picks {
                    let end = t + hold;
                    while t < end {
                        ev.push(width(t, 0.06 + 0.005 * jitter));
                        t += 1.0 / 30.0;
                    }
                    let release_end = t + dwell;
                    while t < release_end {
                        ev.push(width(t, 0.1));
                        ev.push(storage(t + 0.01, 0.12));
                        t += 1.0 / 30.0;
                    }
                    let depart_end = t + 1.5;
                    let mut d = 0.12;
                    while t < depart_end {
                        ev.push(width(t, 0.1));
                        if !occluded {
                            ev.push(storage(t + 0.01, d));
                        }
                        d += 0.02;
                        t += 1.0 / 30.0;
                    }
                }
                ev
            })
        }

        fn with_imu(events: &[MeasurementEvent], offset: f64) -> Vec<MeasurementEvent> {
            let end = events.last().unwrap().t();
            let mut imus = Vec::new();
            let mut t = offset;
            while t < end {
                imus.push(imu(t));
                t += 0.005;
            }
            let mut all: Vec<_> = events.iter().cloned().chain(imus).collect();
            all.sort_by(|a, b| a.t().total_cmp(&b.t()).then(a.measurement.priority().cmp(&b.measurement.priority())));
            all
        }

        proptest! {
            #[test]
            fn samples_tile_the_demo(events in script()) {
                let tasks = segment_demo(&events, &cfg(), STORAGE).unwrap();
                prop_assert_eq!(tasks[0].t_start, events[0].t());
                prop_assert_eq!(tasks.last().unwrap().t_end, events.last().unwrap().t());
                for (i, w) in tasks.windows(2).enumerate() {
                    prop_assert_eq!(w[0].t_end, w[1].t_start);
                    prop_assert_eq!(w[0].index, i);
                }
                for s in &tasks {
                    prop_assert!(s.t_start < s.t_end);
                }
            }

            #[test]
            fn imu_events_do_not_move_boundaries(events in script(), offset in 0.0..0.005f64) {
                let plain = boundaries(&events, &cfg());
                let mixed = boundaries(&with_imu(&events, offset), &cfg());
                prop_assert_eq!(plain, mixed);
            }

            #[test]
            fn width_scaling_is_invariant(events in script(), k in 0.2..5.0f64) {
                let c = cfg();
                let scaled_cfg = SegmenterConfig {
                    max_fruit_width: c.max_fruit_width * k,
                    max_open_width: c.max_open_width * k,
                    release_threshold: c.release_threshold * k,
                    grasp_threshold: c.grasp_threshold * k,
                    width_hysteresis: c.width_hysteresis * k,
                    ..c.clone()
                };
                let scaled: Vec<_> = events
                    .iter()
                    .map(|e| match &e.measurement {
                        Measurement::Width(w) => width(w.t, w.width * k),
                        _ => e.clone(),
                    })
                    .collect();
                prop_assert_eq!(boundaries(&events, &c), boundaries(&scaled, &scaled_cfg));
            }
        }
    }
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::wire::{finite, quat, vec3, Stamped};
use super::{read_jsonl, write_jsonl_file, GroundTruthSample, StreamRecord};
use crate::error::{Error, Result};
use crate::Pose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Stamped", try_from = "Stamped")]
pub struct TrajectorySample {
    pub t: f64,
    pub pose: Pose,
    /// Marginal variances: position xyz (m²) then rotation xyz (rad²).
    pub cov_diag: Option<[f64; 6]>,
}

impl From<TrajectorySample> for Stamped {
    fn from(s: TrajectorySample) -> Self {
        Stamped {
            t: s.t,
            q: s.pose.rotation.canonical().to_array(),
            p: s.pose.translation.into(),
            cov: s.cov_diag,
        }
    }
}

impl TryFrom<Stamped> for TrajectorySample {
    type Error = String;

    fn try_from(w: Stamped) -> Result<Self, String> {
        Ok(TrajectorySample {
            t: finite(w.t, "t")?,
            pose: Pose {
                rotation: quat(w.q)?,
                translation: vec3(w.p, "p")?,
            },
            cov_diag: w.cov,
        })
    }
}

impl StreamRecord for TrajectorySample {
    fn timestamp(&self) -> f64 {
        self.t
    }

    const STRICTLY_INCREASING: bool = true;
}

/// Time-ordered poses with strictly increasing timestamps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples(samples: Vec<TrajectorySample>) -> Result<Self> {
        if let Some(i) = samples.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidInput(format!(
                "trajectory timestamps not strictly increasing at sample {} (t = {})",
                i + 1,
                samples[i + 1].t
            )));
        }
        Ok(Self { samples })
    }

    pub fn from_ground_truth(gt: &[GroundTruthSample]) -> Result<Self> {
        Self::from_samples(
            gt.iter()
                .map(|s| TrajectorySample {
                    t: s.t,
                    pose: s.pose_wg,
                    cov_diag: None,
                })
                .collect(),
        )
    }

    /// Appends a sample. A sample at the same time as the last one replaces it; the
    /// later one carries the more recent estimate. Earlier timestamps are ignored.
    pub fn push(&mut self, sample: TrajectorySample) {
        match self.samples.last_mut() {
            Some(last) if sample.t == last.t => *last = sample,
            Some(last) if sample.t < last.t => {}
            _ => self.samples.push(sample),
        }
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_range(&self) -> Option<(f64, f64)> {
        Some((self.samples.first()?.t, self.samples.last()?.t))
    }

    /// Pose at `t`: translation interpolated linearly, rotation spherically.
    /// `None` outside the sampled range.
    pub fn interpolate(&self, t: f64) -> Option<Pose> {
        let (t0, t1) = self.time_range()?;
        if t < t0 || t > t1 {
            return None;
        }
        let i = self.samples.partition_point(|s| s.t <= t);
        if i == 0 {
            return Some(self.samples[0].pose);
        }
        let a = &self.samples[i - 1];
        if a.t == t || i == self.samples.len() {
            return Some(a.pose);
        }
        let b = &self.samples[i];
        let s = (t - a.t) / (b.t - a.t);
        Some(Pose {
            rotation: a.pose.rotation.slerp(&b.pose.rotation, s),
            translation: a.pose.translation + (b.pose.translation - a.pose.translation) * s,
        })
    }

    pub fn to_ground_truth(&self) -> Vec<GroundTruthSample> {
        self.samples
            .iter()
            .map(|s| GroundTruthSample {
                t: s.t,
                pose_wg: s.pose,
            })
            .collect()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_samples(read_jsonl(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_jsonl_file(&self.samples, path)
    }
}

//! Dense point tracks over normalized time.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Timestamps closer than this are treated as the same frame.
pub const TIME_MATCH_TOL: f64 = 1e-9;

/// Positions of `N` tracked points at `T` shared timestamps.
///
/// Every point has a position at every timestamp. Timestamps are strictly
/// increasing within `[0, 1]` and start at 0. Positions are stored row-major by
/// point, then time.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySet {
    ids: Vec<usize>,
    timestamps: Vec<f64>,
    positions: Vec<Vec3>,
}

/// Where a query time falls relative to the sampled frames.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum TimeSample {
    Frame(usize),
    /// Linear blend `(1 − w)·frame[k] + w·frame[k + 1]`.
    Between(usize, f64),
}

impl TrajectorySet {
    pub fn new(ids: Vec<usize>, timestamps: Vec<f64>, positions: Vec<Vec3>) -> Result<Self> {
        validate_timestamps(&timestamps)?;
        if positions.len() != ids.len() * timestamps.len() {
            return Err(Error::invalid(format!(
                "expected {} positions for {} points × {} frames, got {}",
                ids.len() * timestamps.len(),
                ids.len(),
                timestamps.len(),
                positions.len()
            )));
        }
        let mut seen = std::collections::HashSet::with_capacity(ids.len());
        if let Some(dup) = ids.iter().find(|id| !seen.insert(**id)) {
            return Err(Error::invalid(format!("duplicate trajectory id {dup}")));
        }
        if let Some(i) = positions
            .iter()
            .position(|p| !p.iter().all(|v| v.is_finite()))
        {
            let t = timestamps.len();
            return Err(Error::invalid(format!(
                "non-finite position for point {} at frame {}",
                ids[i / t],
                i % t
            )));
        }
        Ok(Self {
            ids,
            timestamps,
            positions,
        })
    }

    /// Builds a set with ids `0..tracks.len()`.
    pub fn from_tracks(timestamps: Vec<f64>, tracks: Vec<Vec<Vec3>>) -> Result<Self> {
        let t = timestamps.len();
        if let Some((i, tr)) = tracks.iter().enumerate().find(|(_, tr)| tr.len() != t) {
            return Err(Error::invalid(format!(
                "track {i} has {} positions, expected {t}",
                tr.len()
            )));
        }
        let ids = (0..tracks.len()).collect();
        Self::new(ids, timestamps, tracks.into_iter().flatten().collect())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn num_frames(&self) -> usize {
        self.timestamps.len()
    }

    /// All positions, row-major by point then time.
    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    /// Track of the point stored at `index` (not id).
    pub fn track(&self, index: usize) -> &[Vec3] {
        let t = self.timestamps.len();
        &self.positions[index * t..(index + 1) * t]
    }

    pub fn position(&self, index: usize, frame: usize) -> Vec3 {
        self.positions[index * self.timestamps.len() + frame]
    }

    pub fn frame_of_time(&self, time: f64) -> Option<usize> {
        self.timestamps
            .iter()
            .position(|&s| (s - time).abs() <= TIME_MATCH_TOL)
    }

    pub(crate) fn resolve_time(&self, time: f64) -> Result<TimeSample> {
        if let Some(k) = self.frame_of_time(time) {
            return Ok(TimeSample::Frame(k));
        }
        let first = self.timestamps[0];
        let last = *self.timestamps.last().unwrap();
        if !(time > first && time < last) {
            return Err(Error::invalid(format!(
                "time {time} lies outside the sampled range [{first}, {last}]"
            )));
        }
        let k = self.timestamps.partition_point(|&s| s < time) - 1;
        let w = (time - self.timestamps[k]) / (self.timestamps[k + 1] - self.timestamps[k]);
        Ok(TimeSample::Between(k, w))
    }

    pub(crate) fn sample(&self, index: usize, at: TimeSample) -> Vec3 {
        match at {
            TimeSample::Frame(k) => self.position(index, k),
            TimeSample::Between(k, w) => {
                self.position(index, k) * (1.0 - w) + self.position(index, k + 1) * w
            }
        }
    }

    /// Position of every point at `time`, linearly interpolated between
    /// neighbouring frames when `time` is not sampled.
    pub fn positions_at(&self, time: f64) -> Result<Vec<Vec3>> {
        let at = self.resolve_time(time)?;
        Ok((0..self.len()).map(|i| self.sample(i, at)).collect())
    }

    /// Restriction to the given ids, in the given order.
    pub fn subset(&self, ids: &[usize]) -> Result<Self> {
        let lookup: HashMap<usize, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i))
            .collect();
        let mut positions = Vec::with_capacity(ids.len() * self.num_frames());
        for id in ids {
            let &i = lookup
                .get(id)
                .ok_or_else(|| Error::invalid(format!("unknown trajectory id {id}")))?;
            positions.extend_from_slice(self.track(i));
        }
        Self::new(ids.to_vec(), self.timestamps.clone(), positions)
    }

    /// Applies `f` to every position.
    pub fn map_positions(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            ids: self.ids.clone(),
            timestamps: self.timestamps.clone(),
            positions: self.positions.iter().map(f).collect(),
        }
    }

    /// Axis-aligned bounds over all points and frames; `None` when empty.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.positions.first()?;
        Some(
            self.positions
                .iter()
                .fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p))),
        )
    }
}

fn validate_timestamps(ts: &[f64]) -> Result<()> {
    if ts.is_empty() {
        return Err(Error::invalid("at least one timestamp is required"));
    }
    if let Some((i, t)) = ts
        .iter()
        .enumerate()
        .find(|(_, t)| !t.is_finite() || **t < 0.0 || **t > 1.0)
    {
        return Err(Error::invalid(format!(
            "timestamp {i} = {t} is outside [0, 1]"
        )));
    }
    if ts[0].abs() > TIME_MATCH_TOL {
        return Err(Error::invalid(format!(
            "first timestamp must be 0, got {}",
            ts[0]
        )));
    }
    if let Some(i) = (1..ts.len()).find(|&i| ts[i] <= ts[i - 1]) {
        return Err(Error::invalid(format!(
            "timestamps must be strictly increasing: index {i} ({}) follows {}",
            ts[i],
            ts[i - 1]
        )));
    }
    Ok(())
}

/// `n` evenly spaced timestamps `0, 1/(n−1), …, 1`.
pub fn uniform_timestamps(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
    }
}

//! End-to-end part mobility analysis: optional static filtering, rigid-part
//! extraction, and per-part joint recovery.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{
    extract_joint_with_threshold, rodrigues, JointParams, JointType, RigidTransform, Vec3,
    DEFAULT_REVOLUTE_THRESHOLD,
};
use crate::ransac::{sequential_fit, RansacConfig};
use crate::sdmd::{detect_static, SdmdConfig};
use crate::trajectory::TrajectorySet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub ransac: RansacConfig,
    /// Static pre-filter; `None` analyzes every trajectory as moving.
    pub sdmd: Option<SdmdConfig>,
    /// Radians; rotations above this are revolute.
    pub revolute_threshold: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            ransac: RansacConfig::default(),
            sdmd: Some(SdmdConfig::default()),
            revolute_threshold: DEFAULT_REVOLUTE_THRESHOLD,
        }
    }
}

impl AnalysisConfig {
    /// Sets the seed of both the static filter and the part extraction.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.ransac.rng_seed = seed;
        if let Some(s) = self.sdmd.as_mut() {
            s.rng_seed = seed;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.ransac.validate()?;
        if let Some(s) = &self.sdmd {
            s.validate()?;
        }
        if !(self.revolute_threshold.is_finite() && self.revolute_threshold >= 0.0) {
            return Err(Error::invalid("revolute threshold must be non-negative"));
        }
        Ok(())
    }
}

/// Uniform rescaling applied before analysis: `x' = scale·(x − center)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Normalization {
    pub center: Vec3,
    pub scale: f64,
}

impl Normalization {
    /// Maps the bounding box of all positions into a unit cube centred at the origin.
    pub fn unit_box(traj: &TrajectorySet) -> Result<Self> {
        let (lo, hi) = traj
            .bounds()
            .ok_or_else(|| Error::invalid("cannot normalize an empty trajectory set"))?;
        let extent = (hi - lo).max();
        if !(extent > 0.0) {
            return Err(Error::invalid(
                "cannot normalize a zero-extent trajectory set",
            ));
        }
        Ok(Self {
            center: (lo + hi) * 0.5,
            scale: 1.0 / extent,
        })
    }

    pub fn apply(&self, traj: &TrajectorySet) -> TrajectorySet {
        traj.map_positions(|p| (p - self.center) * self.scale)
    }

    /// Expresses a transform fitted in the normalized frame in the input frame.
    pub fn denormalize(&self, t: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: t.rotation,
            translation: self.center - t.rotation * self.center + t.translation / self.scale,
        }
    }
}

/// One recovered rigid part.
#[derive(Clone, Debug, PartialEq)]
pub struct Part {
    pub id: usize,
    /// Ascending.
    pub member_ids: Vec<usize>,
    /// One per configured window, in configuration order.
    pub transforms: Vec<RigidTransform>,
    /// `None` when the part did not move (no joint is recoverable).
    pub joint: Option<JointParams>,
    pub mean_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartMobilityResult {
    /// In extraction order, largest first.
    pub parts: Vec<Part>,
    pub unassigned_ids: Vec<usize>,
    pub static_ids: Vec<usize>,
    pub config: AnalysisConfig,
    pub normalization: Option<Normalization>,
    pub diagnostics: Vec<String>,
}

impl PartMobilityResult {
    /// Index of the window joints are extracted from.
    pub fn motion_window(&self) -> usize {
        self.config.ransac.widest_window()
    }

    /// The part's transform over the widest window.
    pub fn part_motion(&self, part: &Part) -> RigidTransform {
        part.transforms[self.motion_window()]
    }
}

/// Segments trajectories into rigid parts and recovers one joint per part.
///
/// The number of parts is an output. Joints come from each part's transform
/// over the widest configured window.
pub fn analyze(trajectories: &TrajectorySet, cfg: &AnalysisConfig) -> Result<PartMobilityResult> {
    cfg.validate()?;
    if trajectories.is_empty() {
        return Err(Error::invalid("trajectory set is empty"));
    }
    for &(a, b) in &cfg.ransac.windows {
        trajectories.resolve_time(a)?;
        trajectories.resolve_time(b)?;
    }

    let mut result = PartMobilityResult {
        parts: Vec::new(),
        unassigned_ids: Vec::new(),
        static_ids: Vec::new(),
        config: cfg.clone(),
        normalization: None,
        diagnostics: Vec::new(),
    };

    let moving_ids = match &cfg.sdmd {
        Some(sdmd) => {
            let split = detect_static(trajectories, sdmd)?;
            result.static_ids = split.static_ids;
            split.moving_ids
        }
        None => {
            let mut ids = trajectories.ids().to_vec();
            ids.sort_unstable();
            ids
        }
    };

    if moving_ids.len() < cfg.ransac.min_support {
        result.diagnostics.push(format!(
            "{} moving trajectories remain, fewer than min support {}; no parts extracted",
            moving_ids.len(),
            cfg.ransac.min_support
        ));
        result.unassigned_ids = moving_ids;
        return Ok(result);
    }

    let moving = trajectories.subset(&moving_ids)?;
    let fit = sequential_fit(&moving, &cfg.ransac)?;
    let window = cfg.ransac.widest_window();
    for (id, h) in fit.hypotheses.into_iter().enumerate() {
        let joint =
            match extract_joint_with_threshold(&h.transforms[window], cfg.revolute_threshold) {
                Ok(j) => Some(j),
                Err(Error::DegenerateMotion(msg)) => {
                    result.diagnostics.push(format!("part {id}: {msg}"));
                    None
                }
                Err(e) => return Err(e),
            };
        result.parts.push(Part {
            id,
            member_ids: h.member_ids,
            transforms: h.transforms,
            joint,
            mean_residual: h.mean_residual,
        });
    }
    result.unassigned_ids = fit.unassigned_ids;
    Ok(result)
}

/// [`analyze`] in a unit-cube frame, with transforms and joints reported back
/// in the input frame. Thresholds apply in the normalized frame.
pub fn analyze_normalized(
    trajectories: &TrajectorySet,
    cfg: &AnalysisConfig,
) -> Result<PartMobilityResult> {
    let norm = Normalization::unit_box(trajectories)?;
    let mut result = analyze(&norm.apply(trajectories), cfg)?;
    let window = cfg.ransac.widest_window();
    for part in &mut result.parts {
        for t in &mut part.transforms {
            *t = norm.denormalize(t);
        }
        part.mean_residual /= norm.scale;
        if part.joint.is_some() {
            part.joint = Some(extract_joint_with_threshold(
                &part.transforms[window],
                cfg.revolute_threshold,
            )?);
        }
    }
    result.normalization = Some(norm);
    Ok(result)
}

/// Moves points rigidly to joint state `state` (radians or scene units)
/// relative to their current pose.
pub fn apply_joint_state(joint: &JointParams, positions: &[Vec3], state: f64) -> Result<Vec<Vec3>> {
    if !state.is_finite() {
        return Err(Error::invalid("joint state must be finite"));
    }
    match joint.joint_type {
        JointType::Revolute => {
            let p = joint
                .axis_position
                .ok_or_else(|| Error::invalid("revolute joint has no axis position"))?;
            let r = rodrigues(&joint.axis_direction, state);
            Ok(positions.iter().map(|x| r * (x - p) + p).collect())
        }
        JointType::Prismatic => {
            let d = joint.axis_direction * state;
            Ok(positions.iter().map(|x| x + d).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::point_line_distance;
    use std::f64::consts::FRAC_PI_2;

    fn door_and_base() -> TrajectorySet {
        let ts = vec![0.0, 0.5, 1.0];
        let mut tracks = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                let p = Vec3::new(0.1 * i as f64, 0.1 * j as f64, -0.5);
                tracks.push(vec![p; 3]);
            }
        }
        let hinge = Vec3::new(1.2, 0.0, 0.0);
        for i in 0..8 {
            for j in 0..8 {
                let p = Vec3::new(1.3 + 0.08 * i as f64, 0.08 * j as f64, 0.0);
                tracks.push(
                    ts.iter()
                        .map(|&t| {
                            RigidTransform::about_line(&Vec3::y(), &hinge, FRAC_PI_2 * t)
                                .unwrap()
                                .apply(&p)
                        })
                        .collect(),
                );
            }
        }
        TrajectorySet::from_tracks(ts, tracks).unwrap()
    }

    fn quick() -> AnalysisConfig {
        let mut c = AnalysisConfig::default();
        c.ransac.samples_per_model = 200;
        c.sdmd.as_mut().unwrap().samples_per_model = 200;
        c
    }

    #[test]
    fn door_recovered_base_static() {
        let set = door_and_base();
        let r = analyze(&set, &quick()).unwrap();
        assert_eq!(r.static_ids, (0..100).collect::<Vec<_>>());
        assert_eq!(r.parts.len(), 1);
        let j = r.parts[0].joint.unwrap();
        assert_eq!(j.joint_type, JointType::Revolute);
        assert!((j.angle - FRAC_PI_2).abs() < 1e-9);
        assert!(
            point_line_distance(
                &Vec3::new(1.2, 0.0, 0.0),
                &j.axis_position.unwrap(),
                &j.axis_direction
            ) < 1e-9
        );
    }

    #[test]
    fn without_sdmd_static_base_is_a_motionless_part() {
        let mut cfg = quick();
        cfg.sdmd = None;
        let r = analyze(&door_and_base(), &cfg).unwrap();
        assert_eq!(r.parts.len(), 2);
        assert!(r.parts.iter().any(|p| p.joint.is_none()));
        assert!(!r.diagnostics.is_empty());
    }

    #[test]
    fn fully_static_scene_has_no_parts() {
        let ts = vec![0.0, 0.5, 1.0];
        let tracks = (0..50)
            .map(|i| {
                vec![
                    Vec3::new(
                        i as f64 * 0.01,
                        (i % 7) as f64 * 0.03,
                        (i % 3) as f64 * 0.05
                    );
                    3
                ]
            })
            .collect();
        let set = TrajectorySet::from_tracks(ts, tracks).unwrap();
        let r = analyze(&set, &quick()).unwrap();
        assert!(r.parts.is_empty());
        assert_eq!(r.static_ids.len(), 50);
        assert_eq!(r.diagnostics.len(), 1);
    }

    #[test]
    fn normalized_analysis_reports_input_frame() {
        let set = door_and_base().map_positions(|p| p * 10.0 + Vec3::new(5.0, -3.0, 2.0));
        let mut cfg = quick();
        cfg.sdmd.as_mut().unwrap().static_translation_max = 0.05;
        let r = analyze_normalized(&set, &cfg).unwrap();
        assert!(r.normalization.is_some());
        assert_eq!(r.parts.len(), 1);
        let j = r.parts[0].joint.unwrap();
        let hinge = Vec3::new(12.0, 0.0, 0.0) + Vec3::new(5.0, -3.0, 2.0);
        assert!(point_line_distance(&hinge, &j.axis_position.unwrap(), &j.axis_direction) < 1e-8);
    }

    #[test]
    fn joint_state_zero_is_identity() {
        let j = JointParams {
            joint_type: JointType::Revolute,
            axis_direction: Vec3::z(),
            axis_position: Some(Vec3::new(1.0, 0.0, 0.0)),
            angle: 1.0,
            distance: 0.0,
        };
        let pts = vec![Vec3::new(0.3, 0.2, 0.1), Vec3::new(-1.0, 2.0, 0.5)];
        for (a, b) in apply_joint_state(&j, &pts, 0.0).unwrap().iter().zip(&pts) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn prismatic_state_shifts_along_axis() {
        let j = JointParams {
            joint_type: JointType::Prismatic,
            axis_direction: Vec3::z(),
            axis_position: None,
            angle: 0.0,
            distance: 0.16,
        };
        let pts = vec![Vec3::new(0.3, 0.2, 0.1)];
        let moved = apply_joint_state(&j, &pts, 0.16).unwrap();
        assert!((moved[0] - Vec3::new(0.3, 0.2, 0.26)).norm() < 1e-15);
    }

    #[test]
    fn revolute_without_axis_point_is_rejected() {
        let j = JointParams {
            joint_type: JointType::Revolute,
            axis_direction: Vec3::z(),
            axis_position: None,
            angle: 1.0,
            distance: 0.0,
        };
        assert!(apply_joint_state(&j, &[Vec3::zeros()], 0.5).is_err());
    }

    #[test]
    fn recovered_joint_closes_the_motion() {
        let set = door_and_base();
        let r = analyze(&set, &quick()).unwrap();
        let part = &r.parts[0];
        let sub = set.subset(&part.member_ids).unwrap();
        let start = sub.positions_at(0.0).unwrap();
        let end = sub.positions_at(1.0).unwrap();
        let j = part.joint.unwrap();
        let moved = apply_joint_state(&j, &start, j.angle).unwrap();
        for (a, b) in moved.iter().zip(&end) {
            assert!((a - b).norm() < 1e-9);
        }
    }
}

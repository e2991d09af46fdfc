//! Static-during-motion detection.
//!
//! Trajectories are grouped into locally rigid sets with sequential RANSAC over
//! the windows `0 → t` for each sampled time `t`. A group is static when every
//! window's motion has rotation angle and translation magnitude at or below the
//! configured limits. Judging the group rather than each point keeps points
//! near a hinge, which barely move, with the rotating part they belong to.
//! Points claimed by a static group that a moving group fits strictly better
//! are handed to the moving side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{rotation_angle, RigidTransform};
use crate::kabsch::{mean_residual, CorrespondenceSet};
use crate::ransac::{sequential_fit, RansacConfig};
use crate::trajectory::TrajectorySet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SdmdConfig {
    /// Normalized times; the first must be 0.
    pub sample_times: Vec<f64>,
    pub inlier_threshold: f64,
    /// Radians.
    pub static_angle_max: f64,
    /// Scene units.
    pub static_translation_max: f64,
    pub samples_per_model: usize,
    pub max_models: usize,
    pub min_support: usize,
    pub min_support_fraction: f64,
    pub rng_seed: u64,
}

impl Default for SdmdConfig {
    fn default() -> Self {
        let r = RansacConfig::default();
        Self {
            sample_times: vec![0.0, 0.5, 1.0],
            inlier_threshold: 0.05,
            static_angle_max: 0.1,
            static_translation_max: 0.05,
            samples_per_model: r.samples_per_model,
            max_models: r.max_models,
            min_support: r.min_support,
            min_support_fraction: r.min_support_fraction,
            rng_seed: r.rng_seed,
        }
    }
}

impl SdmdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_times.len() < 2 {
            return Err(Error::invalid("SDMD needs at least two sample times"));
        }
        if self.sample_times[0] != 0.0 {
            return Err(Error::invalid("SDMD sample times must start at 0"));
        }
        if self.sample_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "SDMD sample times must be strictly increasing",
            ));
        }
        for (name, v) in [
            ("inlier threshold", self.inlier_threshold),
            ("static angle limit", self.static_angle_max),
            ("static translation limit", self.static_translation_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        self.ransac_config().validate()
    }

    /// The sequential-RANSAC configuration used for grouping: windows `0 → t`.
    pub fn ransac_config(&self) -> RansacConfig {
        RansacConfig {
            inlier_threshold: self.inlier_threshold,
            samples_per_model: self.samples_per_model,
            max_models: self.max_models,
            min_support: self.min_support,
            min_support_fraction: self.min_support_fraction,
            rng_seed: self.rng_seed,
            windows: self.sample_times[1..]
                .iter()
                .map(|&t| (self.sample_times[0], t))
                .collect(),
            ..RansacConfig::default()
        }
    }

    /// Static test for one window's motion: `θ ≤ angle limit` and `‖t‖ ≤ translation limit`.
    pub fn is_static_motion(&self, motion: &RigidTransform) -> bool {
        rotation_angle(&motion.rotation) <= self.static_angle_max
            && motion.translation.norm() <= self.static_translation_max
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SdmdOutcome {
    /// Ascending.
    pub static_ids: Vec<usize>,
    /// Ascending. Includes trajectories no group claimed.
    pub moving_ids: Vec<usize>,
}

pub fn detect_static(trajectories: &TrajectorySet, cfg: &SdmdConfig) -> Result<SdmdOutcome> {
    cfg.validate()?;
    let rcfg = cfg.ransac_config();
    let fit = sequential_fit(trajectories, &rcfg)?;

    let (still, moving): (Vec<_>, Vec<_>) = fit
        .hypotheses
        .into_iter()
        .partition(|h| h.transforms.iter().all(|t| cfg.is_static_motion(t)));

    let mut out = SdmdOutcome::default();
    for h in &moving {
        out.moving_ids.extend_from_slice(&h.member_ids);
    }
    out.moving_ids.extend(fit.unassigned_ids);

    // Near a hinge a point fits the static motion and its own part's motion
    // almost equally well; whichever group was extracted first claimed it.
    // Hand it to a moving group that explains it strictly better.
    for h in &still {
        if moving.is_empty() {
            out.static_ids.extend_from_slice(&h.member_ids);
            continue;
        }
        let members = trajectories.subset(&h.member_ids)?;
        let windows = rcfg
            .windows
            .iter()
            .map(|&(a, b)| {
                CorrespondenceSet::new(members.positions_at(a)?, members.positions_at(b)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let own = mean_residual(&h.transforms, &windows)?;
        let mut best_moving = vec![f64::INFINITY; own.len()];
        for m in &moving {
            for (b, e) in best_moving
                .iter_mut()
                .zip(mean_residual(&m.transforms, &windows)?)
            {
                *b = b.min(e);
            }
        }
        for ((&id, e_own), e_move) in h.member_ids.iter().zip(own).zip(best_moving) {
            if e_move < cfg.inlier_threshold && e_move < e_own {
                out.moving_ids.push(id);
            } else {
                out.static_ids.push(id);
            }
        }
    }
    out.static_ids.sort_unstable();
    out.moving_ids.sort_unstable();
    Ok(out)
}

/// Per-point baseline: static when no sampled position strays more than
/// `threshold` from the point's position at the first sample time.
pub fn displacement_filter(
    trajectories: &TrajectorySet,
    sample_times: &[f64],
    threshold: f64,
) -> Result<SdmdOutcome> {
    let frames = sample_times
        .iter()
        .map(|&t| trajectories.positions_at(t))
        .collect::<Result<Vec<_>>>()?;
    let Some((first, rest)) = frames.split_first() else {
        return Err(Error::invalid("at least one sample time is required"));
    };
    let mut out = SdmdOutcome::default();
    for (i, &id) in trajectories.ids().iter().enumerate() {
        let moved = rest.iter().any(|f| (f[i] - first[i]).norm() > threshold);
        if moved {
            out.moving_ids.push(id);
        } else {
            out.static_ids.push(id);
        }
    }
    out.static_ids.sort_unstable();
    out.moving_ids.sort_unstable();
    Ok(out)
}

//! Sequential RANSAC over trajectories: repeatedly extract the largest set of
//! points that move under one rigid motion, remove it, and continue.
//!
//! A hypothesis is one rigid transform per configured time window, each fitted
//! by Kabsch on a random minimal sample. A point is an inlier when its residual,
//! averaged over the windows, is below the inlier threshold. The winning
//! hypothesis is re-fitted on all of its inliers; the inliers are re-collected
//! under the re-fitted motion and the fit repeated until the set settles.
//! Points that no longer pass are returned to the pool.
//!
//! Sampling is reproducible: sample `s` of extraction round `r` draws from a
//! ChaCha stream keyed by `(rng_seed, r, s)`, and the best sample is chosen by a
//! total order (inlier count, then lower mean residual, then smaller lowest
//! member id, then sample index). Results therefore do not depend on how many
//! threads score the samples.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{RigidTransform, Vec3};
use crate::kabsch;
use crate::trajectory::{TimeSample, TrajectorySet};

/// Cap on re-fit / re-collect rounds for a winning hypothesis.
const MAX_REFITS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacConfig {
    /// Inlier threshold on the window-averaged residual, scene units.
    pub inlier_threshold: f64,
    /// Minimal samples drawn per extracted model.
    pub samples_per_model: usize,
    /// Upper bound on the number of extracted models.
    pub max_models: usize,
    /// Smallest consensus set accepted as a model.
    pub min_support: usize,
    /// Smallest consensus set as a fraction of the points still unassigned.
    pub min_support_fraction: f64,
    pub rng_seed: u64,
    /// `(t_a, t_b)` pairs in normalized time.
    pub windows: Vec<(f64, f64)>,
    /// Trajectories per minimal sample.
    pub minimal_sample_size: usize,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            inlier_threshold: 0.05,
            samples_per_model: 1000,
            max_models: 16,
            min_support: 20,
            min_support_fraction: 0.01,
            rng_seed: 0,
            windows: vec![(0.0, 0.5), (0.0, 1.0)],
            minimal_sample_size: 3,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inlier_threshold.is_finite() && self.inlier_threshold > 0.0) {
            return Err(Error::invalid("inlier threshold must be positive"));
        }
        if self.samples_per_model == 0 {
            return Err(Error::invalid("samples per model must be at least 1"));
        }
        if self.max_models == 0 {
            return Err(Error::invalid("max models must be at least 1"));
        }
        if self.min_support < 3 {
            return Err(Error::invalid("min support must be at least 3"));
        }
        if !(0.0..=1.0).contains(&self.min_support_fraction) {
            return Err(Error::invalid("min support fraction must lie in [0, 1]"));
        }
        if self.minimal_sample_size < 3 {
            return Err(Error::invalid("minimal sample size must be at least 3"));
        }
        if self.windows.is_empty() {
            return Err(Error::invalid("at least one time window is required"));
        }
        for &(a, b) in &self.windows {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::invalid(format!(
                    "window {a}:{b} must satisfy t_a < t_b"
                )));
            }
        }
        Ok(())
    }

    /// Index of the window with the longest time span (first on ties).
    pub fn widest_window(&self) -> usize {
        let mut best = 0;
        for (i, &(a, b)) in self.windows.iter().enumerate() {
            let (ba, bb) = self.windows[best];
            if b - a > bb - ba {
                best = i;
            }
        }
        best
    }
}

/// One rigid part: its members and one re-fitted transform per window.
#[derive(Clone, Debug, PartialEq)]
pub struct PartHypothesis {
    /// Trajectory ids, ascending.
    pub member_ids: Vec<usize>,
    pub transforms: Vec<RigidTransform>,
    /// Mean of the members' window-averaged residuals.
    pub mean_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequentialFit {
    /// Hypotheses in extraction order.
    pub hypotheses: Vec<PartHypothesis>,
    /// Ids not claimed by any hypothesis, ascending.
    pub unassigned_ids: Vec<usize>,
}

/// Best single model over all of `points`, or `None` when the largest
/// consensus set is below `max(min_support, min_support_fraction·N)`.
pub fn fit_one_model(points: &TrajectorySet, cfg: &RansacConfig) -> Result<Option<PartHypothesis>> {
    cfg.validate()?;
    let windows = WindowData::build(points, cfg)?;
    let active: Vec<usize> = (0..points.len()).collect();
    Ok(Extractor::new(points, &windows, cfg)
        .fit(&active, 0)?
        .map(|f| f.into_hypothesis(points)))
}

/// Extracts rigid parts until no valid support set remains, the model budget
/// is spent, or the best consensus set is too small.
pub fn sequential_fit(trajectories: &TrajectorySet, cfg: &RansacConfig) -> Result<SequentialFit> {
    cfg.validate()?;
    if trajectories.is_empty() {
        return Err(Error::invalid("trajectory set is empty"));
    }
    let windows = WindowData::build(trajectories, cfg)?;
    let extractor = Extractor::new(trajectories, &windows, cfg);

    let mut active: Vec<usize> = (0..trajectories.len()).collect();
    let mut hypotheses = Vec::new();
    let mut round = 0u64;
    while hypotheses.len() < cfg.max_models
        && active.len() >= cfg.min_support.max(cfg.minimal_sample_size)
    {
        let Some(found) = extractor.fit(&active, round)? else {
            break;
        };
        let mut taken = vec![false; trajectories.len()];
        for &i in &found.members {
            taken[i] = true;
        }
        active.retain(|&i| !taken[i]);
        hypotheses.push(found.into_hypothesis(trajectories));
        round += 1;
    }

    let mut unassigned_ids: Vec<usize> = active.iter().map(|&i| trajectories.ids()[i]).collect();
    unassigned_ids.sort_unstable();
    Ok(SequentialFit {
        hypotheses,
        unassigned_ids,
    })
}

/// Source/target positions of every point for one window.
struct WindowData {
    source: Vec<Vec3>,
    target: Vec<Vec3>,
}

impl WindowData {
    fn build(traj: &TrajectorySet, cfg: &RansacConfig) -> Result<Vec<Self>> {
        cfg.windows
            .iter()
            .map(|&(a, b)| {
                let sa = traj.resolve_time(a)?;
                let sb = traj.resolve_time(b)?;
                let pick = |at: TimeSample| (0..traj.len()).map(|i| traj.sample(i, at)).collect();
                Ok(Self {
                    source: pick(sa),
                    target: pick(sb),
                })
            })
            .collect()
    }
}

struct Extractor<'a> {
    traj: &'a TrajectorySet,
    windows: &'a [WindowData],
    cfg: &'a RansacConfig,
}

/// Working copy of the active points, contiguous per window.
struct Packed {
    index: Vec<usize>,
    min_id_order: Vec<usize>,
    source: Vec<Vec<Vec3>>,
    target: Vec<Vec<Vec3>>,
}

#[derive(Clone, Copy, Debug)]
struct SampleScore {
    count: usize,
    residual_sum: f64,
    min_id: usize,
    sample: usize,
}

impl SampleScore {
    fn mean(&self) -> f64 {
        self.residual_sum / self.count as f64
    }

    /// Total order: more inliers, lower mean residual, smaller lowest id, earlier sample.
    fn better_than(&self, other: &Self) -> bool {
        if self.count != other.count {
            return self.count > other.count;
        }
        let (a, b) = (self.mean(), other.mean());
        if a != b {
            return a < b;
        }
        if self.min_id != other.min_id {
            return self.min_id < other.min_id;
        }
        self.sample < other.sample
    }
}

struct Found {
    /// Indices into the trajectory set.
    members: Vec<usize>,
    transforms: Vec<RigidTransform>,
    mean_residual: f64,
}

impl Found {
    fn into_hypothesis(self, traj: &TrajectorySet) -> PartHypothesis {
        let mut member_ids: Vec<usize> = self.members.iter().map(|&i| traj.ids()[i]).collect();
        member_ids.sort_unstable();
        PartHypothesis {
            member_ids,
            transforms: self.transforms,
            mean_residual: self.mean_residual,
        }
    }
}

fn sample_rng(seed: u64, round: u64, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(round)));
    rng.set_stream(sample as u64);
    rng
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl<'a> Extractor<'a> {
    fn new(traj: &'a TrajectorySet, windows: &'a [WindowData], cfg: &'a RansacConfig) -> Self {
        Self { traj, windows, cfg }
    }

    fn pack(&self, active: &[usize]) -> Packed {
        let ids = self.traj.ids();
        Packed {
            index: active.to_vec(),
            min_id_order: active.iter().map(|&i| ids[i]).collect(),
            source: self
                .windows
                .iter()
                .map(|w| active.iter().map(|&i| w.source[i]).collect())
                .collect(),
            target: self
                .windows
                .iter()
                .map(|w| active.iter().map(|&i| w.target[i]).collect())
                .collect(),
        }
    }

    /// Fits one transform per window to the packed points at `picks`; `None`
    /// when the sample is degenerate in any window.
    fn fit_sample(&self, packed: &Packed, picks: &[usize]) -> Option<Vec<RigidTransform>> {
        let mut out = Vec::with_capacity(self.windows.len());
        let mut src = Vec::with_capacity(picks.len());
        let mut dst = Vec::with_capacity(picks.len());
        for w in 0..self.windows.len() {
            src.clear();
            dst.clear();
            src.extend(picks.iter().map(|&k| packed.source[w][k]));
            dst.extend(picks.iter().map(|&k| packed.target[w][k]));
            out.push(kabsch::fit(&src, &dst).ok()?);
        }
        Some(out)
    }

    fn draw(&self, packed: &Packed, round: u64, sample: usize) -> Option<Vec<RigidTransform>> {
        let mut rng = sample_rng(self.cfg.rng_seed, round, sample);
        let picks =
            index::sample(&mut rng, packed.index.len(), self.cfg.minimal_sample_size).into_vec();
        self.fit_sample(packed, &picks)
    }

    /// Window-averaged residual of packed point `k`, or `None` once it is
    /// certain to reach the threshold.
    #[inline]
    fn point_error(&self, packed: &Packed, transforms: &[RigidTransform], k: usize) -> Option<f64> {
        let count = transforms.len() as f64;
        let limit = self.cfg.inlier_threshold;
        let mut sum = 0.0;
        for (w, t) in transforms.iter().enumerate() {
            sum += (packed.target[w][k] - t.apply(&packed.source[w][k])).norm();
            if sum / count >= limit {
                return None;
            }
        }
        Some(sum / count)
    }

    fn score(&self, packed: &Packed, transforms: &[RigidTransform], sample: usize) -> SampleScore {
        let mut s = SampleScore {
            count: 0,
            residual_sum: 0.0,
            min_id: usize::MAX,
            sample,
        };
        for k in 0..packed.index.len() {
            if let Some(e) = self.point_error(packed, transforms, k) {
                s.count += 1;
                s.residual_sum += e;
                s.min_id = s.min_id.min(packed.min_id_order[k]);
            }
        }
        s
    }

    fn inliers(&self, packed: &Packed, transforms: &[RigidTransform]) -> Vec<(usize, f64)> {
        (0..packed.index.len())
            .filter_map(|k| self.point_error(packed, transforms, k).map(|e| (k, e)))
            .collect()
    }

    /// One transform per window fitted to the packed points `support`; `None` when degenerate.
    fn refit(&self, packed: &Packed, support: &[usize]) -> Result<Option<Vec<RigidTransform>>> {
        let mut transforms = Vec::with_capacity(self.windows.len());
        for w in 0..self.windows.len() {
            let src: Vec<Vec3> = support.iter().map(|&k| packed.source[w][k]).collect();
            let dst: Vec<Vec3> = support.iter().map(|&k| packed.target[w][k]).collect();
            match kabsch::fit(&src, &dst) {
                Ok(t) => transforms.push(t),
                Err(Error::RankDeficient(_)) | Err(Error::InvalidInput(_)) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        Ok(Some(transforms))
    }

    fn fit(&self, active: &[usize], round: u64) -> Result<Option<Found>> {
        let cfg = self.cfg;
        if active.len() < cfg.minimal_sample_size {
            return Ok(None);
        }
        let required = cfg
            .min_support
            .max((cfg.min_support_fraction * active.len() as f64).ceil() as usize);
        let packed = self.pack(active);

        let best = (0..cfg.samples_per_model)
            .into_par_iter()
            .filter_map(|s| {
                let transforms = self.draw(&packed, round, s)?;
                Some(self.score(&packed, &transforms, s))
            })
            .reduce_with(|a, b| if a.better_than(&b) { a } else { b });

        let Some(best) = best else {
            return Ok(None);
        };
        if best.count < required {
            return Ok(None);
        }

        // Replay the winning sample, then re-fit every window on all of its
        // inliers. The count-maximizing sample can be slightly off and pick up
        // a few boundary points of a neighbouring part, so the re-fit is
        // repeated on the re-collected inliers until the set settles.
        let seed_transforms = self
            .draw(&packed, round, best.sample)
            .expect("winning sample replays deterministically");
        let mut support: Vec<usize> = self
            .inliers(&packed, &seed_transforms)
            .into_iter()
            .map(|(k, _)| k)
            .collect();
        let mut kept;
        let mut transforms;
        let mut rounds = 0;
        loop {
            transforms = match self.refit(&packed, &support)? {
                Some(t) => t,
                None => return Ok(None),
            };
            kept = self.inliers(&packed, &transforms);
            rounds += 1;
            if rounds == MAX_REFITS
                || kept.len() < cfg.minimal_sample_size
                || kept.iter().map(|p| p.0).eq(support.iter().copied())
            {
                break;
            }
            support = kept.iter().map(|p| p.0).collect();
        }
        if kept.len() < required {
            return Ok(None);
        }
        let mean_residual = kept.iter().map(|(_, e)| e).sum::<f64>() / kept.len() as f64;
        Ok(Some(Found {
            members: kept.iter().map(|&(k, _)| packed.index[k]).collect(),
            transforms,
            mean_residual,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::compose_rotation;
    use rand::Rng;

    /// Points on a jittered grid inside a box, moved rigidly over three frames.
    fn rigid_cluster(
        rng: &mut impl Rng,
        center: Vec3,
        n: usize,
        motion_at: impl Fn(f64) -> RigidTransform,
    ) -> Vec<Vec<Vec3>> {
        let ts = [0.0, 0.5, 1.0];
        (0..n)
            .map(|_| {
                let p = center
                    + Vec3::new(
                        rng.random_range(-0.3..0.3),
                        rng.random_range(-0.3..0.3),
                        rng.random_range(-0.3..0.3),
                    );
                ts.iter().map(|&t| motion_at(t).apply(&p)).collect()
            })
            .collect()
    }

    fn spin(axis: Vec3, point: Vec3, total: f64) -> impl Fn(f64) -> RigidTransform {
        move |t| RigidTransform::about_line(&axis, &point, total * t).unwrap()
    }

    fn cfg() -> RansacConfig {
        RansacConfig {
            samples_per_model: 200,
            ..RansacConfig::default()
        }
    }

    #[test]
    fn single_motion_takes_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tracks = rigid_cluster(
            &mut rng,
            Vec3::zeros(),
            100,
            spin(Vec3::y(), Vec3::x(), 1.2),
        );
        let set = TrajectorySet::from_tracks(vec![0.0, 0.5, 1.0], tracks).unwrap();
        let h = fit_one_model(&set, &cfg()).unwrap().unwrap();
        assert_eq!(h.member_ids.len(), 100);
        assert!(h.mean_residual < 1e-9);
    }

    #[test]
    fn static_points_give_identity_motion() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tracks = rigid_cluster(&mut rng, Vec3::zeros(), 50, |_| RigidTransform::identity());
        let set = TrajectorySet::from_tracks(vec![0.0, 0.5, 1.0], tracks).unwrap();
        let h = fit_one_model(&set, &cfg()).unwrap().unwrap();
        assert_eq!(h.member_ids.len(), 50);
        for t in &h.transforms {
            assert!((t.rotation - nalgebra::Matrix3::identity()).abs().max() < 1e-12);
            assert!(t.translation.norm() < 1e-12);
        }
    }

    #[test]
    fn two_clusters_yield_one_at_a_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut tracks = rigid_cluster(
            &mut rng,
            Vec3::zeros(),
            80,
            spin(Vec3::z(), Vec3::zeros(), 1.0),
        );
        tracks.extend(rigid_cluster(
            &mut rng,
            Vec3::new(3.0, 0.0, 0.0),
            80,
            spin(Vec3::y(), Vec3::new(3.0, 0.0, 0.0), -0.8),
        ));
        let set = TrajectorySet::from_tracks(vec![0.0, 0.5, 1.0], tracks).unwrap();
        let h = fit_one_model(&set, &cfg()).unwrap().unwrap();
        let first: Vec<usize> = (0..80).collect();
        let second: Vec<usize> = (80..160).collect();
        assert!(h.member_ids == first || h.member_ids == second);

        let fit = sequential_fit(&set, &cfg()).unwrap();
        assert_eq!(fit.hypotheses.len(), 2);
        assert!(fit.unassigned_ids.is_empty());
    }

    #[test]
    fn tie_goes_to_lower_residual_then_lower_id() {
        let a = SampleScore {
            count: 5,
            residual_sum: 1.0,
            min_id: 9,
            sample: 3,
        };
        let b = SampleScore {
            count: 5,
            residual_sum: 2.0,
            min_id: 0,
            sample: 0,
        };
        assert!(a.better_than(&b));
        let c = SampleScore {
            count: 5,
            residual_sum: 1.0,
            min_id: 4,
            sample: 7,
        };
        assert!(c.better_than(&a));
        let d = SampleScore {
            count: 6,
            residual_sum: 100.0,
            min_id: 99,
            sample: 99,
        };
        assert!(d.better_than(&c));
    }

    #[test]
    fn too_small_support_terminates() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tracks = rigid_cluster(&mut rng, Vec3::zeros(), 10, |_| RigidTransform::identity());
        let set = TrajectorySet::from_tracks(vec![0.0, 0.5, 1.0], tracks).unwrap();
        assert!(fit_one_model(&set, &cfg()).unwrap().is_none());
        let fit = sequential_fit(&set, &cfg()).unwrap();
        assert!(fit.hypotheses.is_empty());
        assert_eq!(fit.unassigned_ids.len(), 10);
    }

    #[test]
    fn collinear_points_never_form_a_model() {
        let tracks: Vec<Vec<Vec3>> = (0..40)
            .map(|i| {
                let p = Vec3::new(i as f64 * 0.01, 0.0, 0.0);
                vec![p, p, p]
            })
            .collect();
        let set = TrajectorySet::from_tracks(vec![0.0, 0.5, 1.0], tracks).unwrap();
        assert!(fit_one_model(&set, &cfg()).unwrap().is_none());
    }

    #[test]
    fn empty_input_is_an_error() {
        let set = TrajectorySet::from_tracks(vec![0.0, 0.5, 1.0], vec![]).unwrap();
        assert!(sequential_fit(&set, &cfg()).is_err());
    }

    #[test]
    fn missing_window_time_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tracks = rigid_cluster(&mut rng, Vec3::zeros(), 30, |_| RigidTransform::identity())
            .into_iter()
            .map(|t| t[..2].to_vec())
            .collect();
        let set = TrajectorySet::from_tracks(vec![0.0, 0.4], tracks).unwrap();
        assert!(sequential_fit(&set, &cfg()).is_err());
    }

    #[test]
    fn config_validation() {
        let bad = [
            RansacConfig {
                inlier_threshold: 0.0,
                ..cfg()
            },
            RansacConfig {
                samples_per_model: 0,
                ..cfg()
            },
            RansacConfig {
                max_models: 0,
                ..cfg()
            },
            RansacConfig {
                min_support: 2,
                ..cfg()
            },
            RansacConfig {
                windows: vec![],
                ..cfg()
            },
            RansacConfig {
                windows: vec![(0.5, 0.5)],
                ..cfg()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        assert_eq!(RansacConfig::default().widest_window(), 1);
    }

    #[test]
    fn deterministic_under_different_pool_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut tracks = rigid_cluster(
            &mut rng,
            Vec3::zeros(),
            60,
            spin(Vec3::z(), Vec3::zeros(), 1.0),
        );
        tracks.extend(rigid_cluster(&mut rng, Vec3::new(2.0, 0.0, 0.0), 40, |t| {
            RigidTransform::from_translation(Vec3::new(0.0, 0.4 * t, 0.0))
        }));
        // noisy copy so residual ties are rare and the reduction order would matter
        let tracks: Vec<Vec<Vec3>> = tracks
            .into_iter()
            .map(|tr| {
                tr.into_iter()
                    .map(|p| p + Vec3::new(rng.random_range(-0.005..0.005), 0.0, 0.0))
                    .collect()
            })
            .collect();
        let set = TrajectorySet::from_tracks(vec![0.0, 0.5, 1.0], tracks).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sequential_fit(&set, &cfg()).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn refit_members_pass_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rot = compose_rotation(&Vec3::y(), 0.9).unwrap();
        let tracks: Vec<Vec<Vec3>> = (0..200)
            .map(|_| {
                let p = Vec3::new(
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                );
                let n = |rng: &mut ChaCha8Rng| {
                    Vec3::new(
                        rng.random_range(-0.03..0.03),
                        rng.random_range(-0.03..0.03),
                        rng.random_range(-0.03..0.03),
                    )
                };
                vec![
                    p,
                    compose_rotation(&Vec3::y(), 0.45).unwrap() * p + n(&mut rng),
                    rot * p + n(&mut rng),
                ]
            })
            .collect();
        let set = TrajectorySet::from_tracks(vec![0.0, 0.5, 1.0], tracks).unwrap();
        let c = cfg();
        let h = fit_one_model(&set, &c).unwrap().unwrap();
        let idx: Vec<usize> = h.member_ids.clone();
        let sub = set.subset(&idx).unwrap();
        let windows: Vec<kabsch::CorrespondenceSet> = c
            .windows
            .iter()
            .map(|&(a, b)| {
                kabsch::CorrespondenceSet::new(
                    sub.positions_at(a).unwrap(),
                    sub.positions_at(b).unwrap(),
                )
                .unwrap()
            })
            .collect();
        let errs = kabsch::mean_residual(&h.transforms, &windows).unwrap();
        assert!(errs.iter().all(|&e| e < c.inlier_threshold));
    }
}

//! Synthetic articulated scenes with exact ground truth.
//!
//! Every part carries its geometry at joint state 0. At normalized time `t`
//! the part sits at state `s(t) = start + (end − start)·profile(t)`; the
//! trajectory of a point is its t = 0 position carried by the relative motion
//! `J(s(t))·J(s(0))⁻¹`.
//!
//! Built-in scenes use Y up and +Z as the front. Their motion ranges follow the
//! reference asset tables; geometry and axis placement are canonical stand-ins
//! (boxes, discs, hinges along panel edges), chosen so that distinct motions
//! stay separable at the default inlier threshold.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{JointParams, JointType, RigidTransform, Vec3};
use crate::trajectory::{uniform_timestamps, TrajectorySet};

pub const DEFAULT_FRAMES: usize = 200;
pub const DEFAULT_POINTS_PER_PART: usize = 2000;
/// Base points relative to a part. A heavy base keeps a least-squares refit
/// from settling halfway between the base and a slow part.
pub const BASE_POINTS_FACTOR: usize = 4;
/// Per-frame step of outlier random walks, scene units.
pub const OUTLIER_STEP: f64 = 0.02;

const STREAM_GEOMETRY: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_OUTLIERS: u64 = 2;

/// Surface from which points are sampled uniformly by area.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Primitive {
    /// Axis-aligned box.
    Box {
        center: Vec3,
        half_extents: Vec3,
    },
    /// Closed cylinder.
    Cylinder {
        center: Vec3,
        axis: Vec3,
        radius: f64,
        half_length: f64,
    },
    Composite {
        items: Vec<Primitive>,
    },
}

impl Primitive {
    pub fn area(&self) -> f64 {
        match self {
            Primitive::Box {
                half_extents: h, ..
            } => 8.0 * (h.x * h.y + h.y * h.z + h.x * h.z),
            Primitive::Cylinder {
                radius,
                half_length,
                ..
            } => 4.0 * PI * radius * half_length + 2.0 * PI * radius * radius,
            Primitive::Composite { items } => items.iter().map(Primitive::area).sum(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Primitive::Box {
                center,
                half_extents,
            } => {
                if !center.iter().all(|v| v.is_finite())
                    || !half_extents.iter().all(|v| v.is_finite() && *v >= 0.0)
                {
                    return Err(Error::invalid(
                        "box needs a finite centre and non-negative half extents",
                    ));
                }
            }
            Primitive::Cylinder {
                center,
                axis,
                radius,
                half_length,
            } => {
                if !center.iter().all(|v| v.is_finite())
                    || !(axis.norm() > 0.0 && axis.iter().all(|v| v.is_finite()))
                    || !(radius.is_finite() && *radius > 0.0)
                    || !(half_length.is_finite() && *half_length >= 0.0)
                {
                    return Err(Error::invalid(
                        "cylinder needs a finite centre, non-zero axis, positive radius and non-negative half length",
                    ));
                }
            }
            Primitive::Composite { items } => {
                for item in items {
                    item.validate()?;
                }
            }
        }
        if !(self.area() > 0.0) {
            return Err(Error::invalid("primitive has zero surface area"));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut impl Rng) -> Vec3 {
        match self {
            Primitive::Box {
                center,
                half_extents: h,
            } => {
                let areas = [h.y * h.z, h.x * h.z, h.x * h.y];
                let normal = pick(rng, &areas);
                let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let mut p = Vec3::zeros();
                for a in 0..3 {
                    p[a] = if a == normal {
                        side * h[a]
                    } else {
                        rng.random_range(-1.0..=1.0) * h[a]
                    };
                }
                center + p
            }
            Primitive::Cylinder {
                center,
                axis,
                radius,
                half_length,
            } => {
                let a = axis.normalize();
                let e1 = a.cross(&least_aligned(&a)).normalize();
                let e2 = a.cross(&e1);
                let phi = rng.random_range(0.0..2.0 * PI);
                let radial = e1 * phi.cos() + e2 * phi.sin();
                let lateral = 4.0 * PI * radius * half_length;
                let cap = PI * radius * radius;
                match pick(rng, &[lateral, cap, cap]) {
                    0 => {
                        center
                            + a * rng.random_range(-half_length..=*half_length)
                            + radial * *radius
                    }
                    k => {
                        let side = if k == 1 { 1.0 } else { -1.0 };
                        center
                            + a * (side * half_length)
                            + radial * (radius * rng.random::<f64>().sqrt())
                    }
                }
            }
            Primitive::Composite { items } => {
                let areas: Vec<f64> = items.iter().map(Primitive::area).collect();
                items[pick(rng, &areas)].sample(rng)
            }
        }
    }
}

fn least_aligned(a: &Vec3) -> Vec3 {
    let i = a.iamin();
    let mut e = Vec3::zeros();
    e[i] = 1.0;
    e
}

/// Index drawn with probability proportional to `weights`.
fn pick(rng: &mut impl Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub count: usize,
    pub primitive: Primitive,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionProfile {
    #[default]
    Linear,
    /// Smoothstep `3t² − 2t³`.
    Ease,
}

impl MotionProfile {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            MotionProfile::Linear => t,
            MotionProfile::Ease => t * t * (3.0 - 2.0 * t),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartSpec {
    #[serde(default)]
    pub name: String,
    pub shape: Shape,
    pub joint_type: JointType,
    pub axis_direction: Vec3,
    /// Required for revolute joints.
    #[serde(default)]
    pub axis_point: Option<Vec3>,
    /// Degrees for revolute joints, scene units for prismatic ones.
    pub motion_range: (f64, f64),
    #[serde(default)]
    pub profile: MotionProfile,
}

impl PartSpec {
    fn validate(&self) -> Result<()> {
        self.shape.primitive.validate()?;
        if !(self.axis_direction.norm() > 0.0 && self.axis_direction.iter().all(|v| v.is_finite()))
        {
            return Err(Error::invalid(format!(
                "part '{}': axis direction must be non-zero",
                self.name
            )));
        }
        if !(self.motion_range.0.is_finite() && self.motion_range.1.is_finite()) {
            return Err(Error::invalid(format!(
                "part '{}': motion range must be finite",
                self.name
            )));
        }
        if self.joint_type == JointType::Revolute {
            match self.axis_point {
                Some(p) if p.iter().all(|v| v.is_finite()) => {}
                _ => {
                    return Err(Error::invalid(format!(
                        "part '{}': revolute joint needs a finite axis point",
                        self.name
                    )))
                }
            }
        }
        Ok(())
    }

    /// Joint state at normalized time `t`, in radians or scene units.
    pub fn state_at(&self, t: f64) -> f64 {
        let (a, b) = match self.joint_type {
            JointType::Revolute => (
                self.motion_range.0.to_radians(),
                self.motion_range.1.to_radians(),
            ),
            JointType::Prismatic => self.motion_range,
        };
        a + (b - a) * self.profile.eval(t)
    }

    /// Rigid motion taking the rest geometry (state 0) to `state`.
    pub fn joint_transform(&self, state: f64) -> RigidTransform {
        let u = self.axis_direction.normalize();
        match self.joint_type {
            JointType::Revolute => {
                RigidTransform::about_line(&u, &self.axis_point.unwrap_or_default(), state)
                    .expect("normalized axis")
            }
            JointType::Prismatic => RigidTransform::from_translation(u * state),
        }
    }

    /// Motion from the t = 0 pose to the pose at `t`.
    pub fn relative_pose(&self, t: f64) -> RigidTransform {
        self.joint_transform(self.state_at(t)) * self.joint_transform(self.state_at(0.0)).inverse()
    }

    /// Joint parameters of the 0 → 1 motion, canonicalized (angle in `[0, π]`).
    pub fn ground_truth_joint(&self) -> JointParams {
        let delta = self.state_at(1.0) - self.state_at(0.0);
        let u = self.axis_direction.normalize();
        match self.joint_type {
            JointType::Revolute => {
                // Wrap into (−π, π] so the reported angle is the canonical one.
                let wrapped = delta.rem_euclid(2.0 * PI);
                let wrapped = if wrapped > PI {
                    wrapped - 2.0 * PI
                } else {
                    wrapped
                };
                JointParams {
                    joint_type: JointType::Revolute,
                    axis_direction: if wrapped < 0.0 { -u } else { u },
                    axis_position: self.axis_point,
                    angle: wrapped.abs(),
                    distance: 0.0,
                }
            }
            JointType::Prismatic => JointParams {
                joint_type: JointType::Prismatic,
                axis_direction: if delta < 0.0 { -u } else { u },
                axis_position: None,
                angle: 0.0,
                distance: delta.abs(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(default)]
    pub name: String,
    /// Static geometry; `None` for a scene of moving parts only.
    #[serde(default)]
    pub base: Option<Shape>,
    pub parts: Vec<PartSpec>,
    #[serde(default = "default_timestamps")]
    pub timestamps: Vec<f64>,
    #[serde(default)]
    pub noise_sigma: f64,
    /// Fraction of trajectories replaced by random walks, in `[0, 1)`.
    #[serde(default)]
    pub outlier_fraction: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_timestamps() -> Vec<f64> {
    uniform_timestamps(DEFAULT_FRAMES)
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(base) = &self.base {
            base.primitive.validate()?;
        }
        for p in &self.parts {
            p.validate()?;
        }
        if self.total_points() == 0 {
            return Err(Error::invalid("scene has no points"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::invalid(
                "noise sigma must be finite and non-negative",
            ));
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return Err(Error::invalid("outlier fraction must lie in [0, 1)"));
        }
        TrajectorySet::new(Vec::new(), self.timestamps.clone(), Vec::new())?;
        Ok(())
    }

    /// Parts smaller than `min_support` cannot be recovered; one message per such part.
    pub fn warnings(&self, min_support: usize) -> Vec<String> {
        self.parts
            .iter()
            .enumerate()
            .filter(|(_, p)| p.shape.count < min_support)
            .map(|(i, p)| {
                format!(
                    "part {i} ('{}') has {} points, below min support {min_support}",
                    p.name, p.shape.count
                )
            })
            .collect()
    }

    pub fn total_points(&self) -> usize {
        self.base.as_ref().map_or(0, |b| b.count)
            + self.parts.iter().map(|p| p.shape.count).sum::<usize>()
    }

    /// Sets every part to `n` points and the base to `BASE_POINTS_FACTOR · n`.
    pub fn with_points_per_part(mut self, n: usize) -> Self {
        if let Some(b) = self.base.as_mut() {
            b.count = BASE_POINTS_FACTOR * n;
        }
        for p in &mut self.parts {
            p.shape.count = n;
        }
        self
    }

    pub fn with_frames(mut self, frames: usize) -> Self {
        self.timestamps = uniform_timestamps(frames);
        self
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn with_outliers(mut self, fraction: f64) -> Self {
        self.outlier_fraction = fraction;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PointLabel {
    Base,
    Part(usize),
    Outlier,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthPart {
    pub name: String,
    pub joint: JointParams,
    pub motion_range: (f64, f64),
    /// Motion from t = 0 to each timestamp.
    pub poses: Vec<RigidTransform>,
}

impl GroundTruthPart {
    /// The 0 → 1 motion.
    pub fn motion(&self) -> RigidTransform {
        *self.poses.last().expect("at least one timestamp")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub scene: String,
    pub timestamps: Vec<f64>,
    /// Indexed by trajectory id.
    pub labels: Vec<PointLabel>,
    /// Noise-free t = 0 position of every trajectory (outliers: walk start).
    pub start_positions: Vec<Vec3>,
    pub parts: Vec<GroundTruthPart>,
}

impl GroundTruth {
    /// Ids of the points of part `k`, ascending.
    pub fn part_members(&self, k: usize) -> Vec<usize> {
        self.members(PointLabel::Part(k))
    }

    pub fn members(&self, label: PointLabel) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == label)
            .map(|(i, _)| i)
            .collect()
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Samples the scene and animates it. Geometry, noise and outliers draw from
/// independent streams of the seed, so changing the noise level leaves the
/// clean geometry unchanged.
pub fn generate(spec: &SceneSpec) -> Result<(TrajectorySet, GroundTruth)> {
    spec.validate()?;
    let mut geo = stream_rng(spec.rng_seed, STREAM_GEOMETRY);
    let ts = &spec.timestamps;

    let mut labels = Vec::with_capacity(spec.total_points());
    let mut starts = Vec::with_capacity(spec.total_points());
    if let Some(base) = &spec.base {
        for _ in 0..base.count {
            starts.push(base.primitive.sample(&mut geo));
            labels.push(PointLabel::Base);
        }
    }
    let mut gt_parts = Vec::with_capacity(spec.parts.len());
    let mut part_poses = Vec::with_capacity(spec.parts.len());
    for (k, part) in spec.parts.iter().enumerate() {
        let start_pose = part.joint_transform(part.state_at(0.0));
        for _ in 0..part.shape.count {
            starts.push(start_pose.apply(&part.shape.primitive.sample(&mut geo)));
            labels.push(PointLabel::Part(k));
        }
        let poses: Vec<RigidTransform> = ts.iter().map(|&t| part.relative_pose(t)).collect();
        gt_parts.push(GroundTruthPart {
            name: part.name.clone(),
            joint: part.ground_truth_joint(),
            motion_range: part.motion_range,
            poses: poses.clone(),
        });
        part_poses.push(poses);
    }

    let n = starts.len();
    let mut positions = Vec::with_capacity(n * ts.len());
    for (x, label) in starts.iter().zip(&labels) {
        match label {
            PointLabel::Part(k) => {
                positions.extend(part_poses[*k].iter().map(|pose| pose.apply(x)))
            }
            _ => positions.extend(std::iter::repeat(*x).take(ts.len())),
        }
    }

    if spec.noise_sigma > 0.0 {
        let mut rng = stream_rng(spec.rng_seed, STREAM_NOISE);
        let normal = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
        for p in &mut positions {
            *p += Vec3::from_fn(|_, _| normal.sample(&mut rng));
        }
    }

    let n_outliers = (spec.outlier_fraction * n as f64).round() as usize;
    if n_outliers > 0 {
        let mut rng = stream_rng(spec.rng_seed, STREAM_OUTLIERS);
        let (lo, hi) = starts
            .iter()
            .fold((starts[0], starts[0]), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
        let ids = rand::seq::index::sample(&mut rng, n, n_outliers).into_vec();
        for id in ids {
            let mut p = Vec3::from_fn(|a, _| lo[a] + (hi[a] - lo[a]) * rng.random::<f64>());
            starts[id] = p;
            labels[id] = PointLabel::Outlier;
            for k in 0..ts.len() {
                if k > 0 {
                    p += Vec3::from_fn(|_, _| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        OUTLIER_STEP * z
                    });
                }
                positions[id * ts.len() + k] = p;
            }
        }
    }

    let traj = TrajectorySet::new((0..n).collect(), ts.clone(), positions)?;
    let gt = GroundTruth {
        scene: spec.name.clone(),
        timestamps: ts.clone(),
        labels,
        start_positions: starts,
        parts: gt_parts,
    };
    Ok((traj, gt))
}

/// Smallest window-averaged residual of any labelled point under a motion
/// other than its own (the base counts as the identity motion), over the
/// windows `0 → t` for each `t` in `times`. Sequential fitting with inlier
/// threshold ε keeps parts apart when this exceeds ε by a noise margin.
pub fn motion_separation(spec: &SceneSpec, gt: &GroundTruth, times: &[f64]) -> f64 {
    let mut motions: Vec<Vec<RigidTransform>> = vec![vec![RigidTransform::identity(); times.len()]];
    for part in &spec.parts {
        motions.push(times.iter().map(|&t| part.relative_pose(t)).collect());
    }
    let has_base = spec.base.as_ref().is_some_and(|b| b.count > 0);
    let mut worst = f64::INFINITY;
    for (x, label) in gt.start_positions.iter().zip(&gt.labels) {
        let own = match label {
            PointLabel::Base => 0,
            PointLabel::Part(k) => k + 1,
            PointLabel::Outlier => continue,
        };
        for (m, other) in motions.iter().enumerate() {
            if m == own || (m == 0 && !has_base) {
                continue;
            }
            let e = other
                .iter()
                .zip(&motions[own])
                .map(|(a, b)| (a.apply(x) - b.apply(x)).norm())
                .sum::<f64>()
                / times.len() as f64;
            worst = worst.min(e);
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Built-in catalog

/// Gap between a hinge line and the nearest edge of its panel.
const HINGE_GAP: f64 = 0.08;
/// Hinges sit this far in front of the body's front face.
const HINGE_STANDOFF: f64 = 0.1;
const PANEL_HALF_THICKNESS: f64 = 0.01;

pub const CATALOG: &[&str] = &[
    "blade-103706",
    "fridge-10905",
    "oven-101917",
    "scissor-11100",
    "stapler-103111",
    "storage-45135",
    "usb-100109",
    "washer-103776",
    "fridge-11304",
    "storage-47024",
    "storage-47648",
    "table-31249",
    "storage-47254",
    "fridge-10489",
];

/// Catalog scenes whose motion ranges must be supplied by the caller.
pub const RANGELESS: &[&str] = &["storage-47254", "fridge-10489"];

fn bx(center: [f64; 3], half: [f64; 3]) -> Primitive {
    Primitive::Box {
        center: Vec3::from(center),
        half_extents: Vec3::from(half),
    }
}

fn shape(count: usize, primitive: Primitive) -> Shape {
    Shape { count, primitive }
}

fn revolute(
    name: &str,
    primitive: Primitive,
    axis: Vec3,
    point: Vec3,
    range: (f64, f64),
) -> PartSpec {
    PartSpec {
        name: name.into(),
        shape: shape(DEFAULT_POINTS_PER_PART, primitive),
        joint_type: JointType::Revolute,
        axis_direction: axis,
        axis_point: Some(point),
        motion_range: range,
        profile: MotionProfile::Linear,
    }
}

fn prismatic(name: &str, primitive: Primitive, axis: Vec3, range: (f64, f64)) -> PartSpec {
    PartSpec {
        name: name.into(),
        shape: shape(DEFAULT_POINTS_PER_PART, primitive),
        joint_type: JointType::Prismatic,
        axis_direction: axis,
        axis_point: None,
        motion_range: range,
        profile: MotionProfile::Linear,
    }
}

/// Cabinet body spanning `x ∈ [−w, w]`, `y ∈ [0, h]`, `z ∈ [−d, d]`.
fn body(w: f64, h: f64, d: f64) -> Shape {
    shape(
        BASE_POINTS_FACTOR * DEFAULT_POINTS_PER_PART,
        bx([0.0, h / 2.0, 0.0], [w, h / 2.0, d]),
    )
}

/// Front panel on a vertical hinge at `x = hinge_x`, standing `HINGE_STANDOFF`
/// in front of `front_z`. The panel spans `width` toward `side` (+1: +x),
/// starting `gap` from the hinge. Returns the panel and a point on the hinge.
fn vertical_panel(
    front_z: f64,
    hinge_x: f64,
    side: f64,
    width: f64,
    y: (f64, f64),
    gap: f64,
) -> (Primitive, Vec3) {
    let z = front_z + HINGE_STANDOFF;
    let cx = hinge_x + side * (gap + width / 2.0);
    let panel = bx(
        [cx, (y.0 + y.1) / 2.0, z],
        [width / 2.0, (y.1 - y.0) / 2.0, PANEL_HALF_THICKNESS],
    );
    (panel, Vec3::new(hinge_x, 0.0, z))
}

/// Front panel on a horizontal hinge at `y = hinge_y`; `side` +1 puts the
/// panel above the hinge.
fn horizontal_panel(
    front_z: f64,
    hinge_y: f64,
    side: f64,
    height: f64,
    x: (f64, f64),
    gap: f64,
) -> (Primitive, Vec3) {
    let z = front_z + HINGE_STANDOFF;
    let cy = hinge_y + side * (gap + height / 2.0);
    let panel = bx(
        [(x.0 + x.1) / 2.0, cy, z],
        [(x.1 - x.0) / 2.0, height / 2.0, PANEL_HALF_THICKNESS],
    );
    (panel, Vec3::new(0.0, hinge_y, z))
}

/// Door on a hinge. About `+y`, negative angles swing a panel lying toward +x
/// of its hinge outward; about `−y`, positive angles do.
fn door(name: &str, (panel, hinge): (Primitive, Vec3), axis: Vec3, range: (f64, f64)) -> PartSpec {
    revolute(name, panel, axis, hinge, range)
}

fn drawer(name: &str, center: [f64; 3], half: [f64; 3], axis: Vec3, range: (f64, f64)) -> PartSpec {
    // Front panel plus tray walls.
    let [cx, cy, cz] = center;
    let [hx, hy, hz] = half;
    let tray = Primitive::Composite {
        items: vec![
            bx([cx, cy, cz + hz], [hx, hy, PANEL_HALF_THICKNESS]),
            bx([cx, cy - hy, cz], [hx, PANEL_HALF_THICKNESS, hz]),
            bx([cx - hx, cy, cz], [PANEL_HALF_THICKNESS, hy, hz]),
            bx([cx + hx, cy, cz], [PANEL_HALF_THICKNESS, hy, hz]),
        ],
    };
    prismatic(name, tray, axis, range)
}

fn scene(name: &str, base: Shape, parts: Vec<PartSpec>) -> SceneSpec {
    SceneSpec {
        name: name.into(),
        base: Some(base),
        parts,
        timestamps: default_timestamps(),
        noise_sigma: 0.0,
        outlier_fraction: 0.0,
        rng_seed: 0,
    }
}

/// A catalog scene with its reference motion ranges.
pub fn builtin_scene(name: &str) -> Result<SceneSpec> {
    if RANGELESS.contains(&name) {
        return Err(Error::invalid(format!(
            "scene '{name}' has no reference motion ranges; supply them with builtin_scene_with_ranges"
        )));
    }
    build(name, None)
}

/// A catalog scene with caller-supplied ranges, one per part in catalog order.
pub fn builtin_scene_with_ranges(name: &str, ranges: &[(f64, f64)]) -> Result<SceneSpec> {
    build(name, Some(ranges))
}

fn build(name: &str, ranges: Option<&[(f64, f64)]>) -> Result<SceneSpec> {
    let (x, y, z) = (Vec3::x(), Vec3::y(), Vec3::z());
    let base = |primitive| shape(BASE_POINTS_FACTOR * DEFAULT_POINTS_PER_PART, primitive);
    let mut spec = match name {
        "blade-103706" => scene(
            name,
            base(bx([0.0, 0.0, 0.0], [0.5, 0.08, 0.05])),
            vec![prismatic(
                "blade",
                bx([0.65, 0.0, 0.0], [0.3, 0.05, 0.005]),
                x,
                (0.0, 0.5),
            )],
        ),
        "fridge-10905" => scene(
            name,
            body(0.45, 1.6, 0.4),
            vec![door(
                "door",
                vertical_panel(0.4, -0.45, 1.0, 0.82, (0.05, 1.55), HINGE_GAP),
                y,
                (-110.0, 0.0),
            )],
        ),
        "oven-101917" => scene(
            name,
            body(0.5, 1.0, 0.4),
            // Bottom hinge; positive angles about +x tilt the door outward.
            vec![door(
                "door",
                horizontal_panel(0.4, 0.12, 1.0, 0.7, (-0.45, 0.45), HINGE_GAP),
                x,
                (0.0, 90.0),
            )],
        ),
        "scissor-11100" => {
            // Blades in parallel planes, pivot on the z axis through the origin.
            let blade = |z: f64| Primitive::Composite {
                items: vec![
                    bx([0.5, 0.0, z], [0.4, 0.04, 0.01]),
                    bx([-0.35, 0.0, z], [0.25, 0.06, 0.01]),
                ],
            };
            scene(
                name,
                base(blade(-0.03)),
                vec![revolute(
                    "blade",
                    blade(0.03),
                    z,
                    Vec3::zeros(),
                    (45.0, -45.0),
                )],
            )
        }
        "stapler-103111" => {
            // Arm hinged about x at the back; negative angles lift it.
            let arm = bx([0.0, 0.2, -0.4 + HINGE_GAP + 0.35], [0.08, 0.03, 0.35]);
            scene(
                name,
                base(bx([0.0, 0.05, 0.0], [0.1, 0.05, 0.45])),
                vec![revolute(
                    "arm",
                    arm,
                    x,
                    Vec3::new(0.0, 0.2, -0.4),
                    (0.0, -80.0),
                )],
            )
        }
        "storage-45135" => scene(
            name,
            body(0.5, 1.0, 0.4),
            vec![drawer(
                "drawer",
                [0.0, 0.5, 0.05],
                [0.4, 0.3, 0.35],
                z,
                (0.0, 0.5),
            )],
        ),
        "usb-100109" => {
            // Swivel cover turning about a vertical pivot beyond the plug's end.
            let pivot = Vec3::new(-0.3, 0.0, 0.0);
            let cover = bx([pivot.x + HINGE_GAP + 0.3, 0.0, 0.0], [0.3, 0.06, 0.12]);
            scene(
                name,
                base(bx([0.25, -0.12, 0.0], [0.45, 0.03, 0.08])),
                vec![revolute("cover", cover, y, pivot, (0.0, -90.0))],
            )
        }
        "washer-103776" => {
            let (hinge_x, zf) = (-0.45, 0.4 + HINGE_STANDOFF);
            let round_door = Primitive::Cylinder {
                center: Vec3::new(hinge_x + 0.1 + 0.3, 0.5, zf),
                axis: z,
                radius: 0.3,
                half_length: 0.03,
            };
            scene(
                name,
                body(0.5, 1.0, 0.4),
                vec![revolute(
                    "door",
                    round_door,
                    y,
                    Vec3::new(hinge_x, 0.0, zf),
                    (0.0, -60.0),
                )],
            )
        }
        "fridge-11304" => scene(
            name,
            body(0.5, 1.6, 0.4),
            // French doors hinged on opposite edges.
            vec![
                door(
                    "left door",
                    vertical_panel(0.4, -0.5, 1.0, 0.36, (0.05, 1.55), HINGE_GAP),
                    y,
                    (0.0, -180.0),
                ),
                door(
                    "right door",
                    vertical_panel(0.4, 0.5, -1.0, 0.36, (0.05, 1.55), HINGE_GAP),
                    -y,
                    (0.0, -90.0),
                ),
            ],
        ),
        "storage-47024" => scene(
            name,
            body(0.5, 1.2, 0.4),
            vec![
                door(
                    "door",
                    vertical_panel(0.4, 0.5, -1.0, 0.82, (0.65, 1.15), HINGE_GAP),
                    y,
                    (0.0, 90.0),
                ),
                drawer(
                    "drawer",
                    [0.0, 0.3, 0.05],
                    [0.42, 0.22, 0.35],
                    z,
                    (0.0, 0.7),
                ),
            ],
        ),
        "storage-47648" => {
            // Lower flaps on horizontal hinges at different heights, middle
            // doors on vertical hinges at opposite edges, drawers on top, away
            // from every hinge line. Two parts sharing a hinge line, or a
            // drawer next to one, admit a compromise motion that gathers more
            // inliers than either exact motion. The tray sits behind the
            // front drawer and slides sideways, along the line joining the
            // two: drawers sliding along one direction by 0.1 and 0.16 would
            // be a single motion at ε = 0.05, and a relative slide across the
            // joining line is mimicked by a small rotation.
            let (gap, flap_gap) = (0.2, 0.3);
            scene(
                name,
                body(0.7, 2.0, 0.4),
                vec![
                    door(
                        "upper right door",
                        vertical_panel(0.4, 0.7, -1.0, 0.4, (1.1, 1.6), gap),
                        y,
                        (0.0, 120.0),
                    ),
                    door(
                        "upper left door",
                        vertical_panel(0.4, -0.7, 1.0, 0.4, (1.1, 1.6), gap),
                        y,
                        (0.0, -120.0),
                    ),
                    door(
                        "lower left flap",
                        horizontal_panel(0.4, 0.0, 1.0, 0.45, (-0.6, -0.05), flap_gap),
                        -x,
                        (0.0, -60.0),
                    ),
                    door(
                        "lower right flap",
                        horizontal_panel(0.4, 1.05, -1.0, 0.45, (0.05, 0.6), flap_gap),
                        -x,
                        (0.0, 60.0),
                    ),
                    drawer(
                        "front drawer",
                        [-0.25, 1.8, 0.05],
                        [0.2, 0.1, 0.3],
                        z,
                        (0.0, 0.1),
                    ),
                    drawer(
                        "side tray",
                        [0.39, 1.8, -0.35],
                        [0.2, 0.1, 0.1],
                        x,
                        (0.0, 0.16),
                    ),
                ],
            )
        }
        "table-31249" => scene(
            name,
            base(bx([0.0, 0.4, 0.0], [0.8, 0.4, 0.4])),
            vec![
                drawer(
                    "left drawer",
                    [-0.3, 0.65, 0.05],
                    [0.25, 0.1, 0.3],
                    z,
                    (0.0, 0.38),
                ),
                drawer(
                    "right drawer",
                    [0.3, 0.65, 0.05],
                    [0.25, 0.1, 0.3],
                    z,
                    (0.35, 0.0),
                ),
                door(
                    "left door",
                    vertical_panel(0.4, -0.8, 1.0, 0.5, (0.05, 0.45), HINGE_GAP),
                    y,
                    (0.0, -90.0),
                ),
                door(
                    "right door",
                    vertical_panel(0.4, 0.8, -1.0, 0.5, (0.05, 0.45), HINGE_GAP),
                    y,
                    (0.0, 90.0),
                ),
            ],
        ),
        "storage-47254" => scene(
            name,
            body(0.5, 1.2, 0.4),
            vec![
                door(
                    "door",
                    vertical_panel(0.4, -0.5, 1.0, 0.82, (0.65, 1.15), HINGE_GAP),
                    y,
                    (0.0, 0.0),
                ),
                drawer(
                    "drawer",
                    [0.0, 0.3, 0.05],
                    [0.42, 0.22, 0.35],
                    z,
                    (0.0, 0.0),
                ),
            ],
        ),
        "fridge-10489" => scene(
            name,
            body(0.5, 1.6, 0.4),
            vec![
                door(
                    "upper door",
                    vertical_panel(0.4, 0.5, -1.0, 0.82, (0.85, 1.55), HINGE_GAP),
                    y,
                    (0.0, 0.0),
                ),
                door(
                    "lower door",
                    vertical_panel(0.4, -0.5, 1.0, 0.82, (0.05, 0.75), HINGE_GAP),
                    y,
                    (0.0, 0.0),
                ),
            ],
        ),
        _ => {
            return Err(Error::UnknownScene {
                name: name.into(),
                catalog: CATALOG.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    if let Some(ranges) = ranges {
        if ranges.len() != spec.parts.len() {
            return Err(Error::invalid(format!(
                "scene '{name}' has {} parts but {} ranges were given",
                spec.parts.len(),
                ranges.len()
            )));
        }
        for (p, r) in spec.parts.iter_mut().zip(ranges) {
            p.motion_range = *r;
        }
    }
    Ok(spec)
}

// ---------------------------------------------------------------------------
// Randomized scenes

/// Required [`motion_separation`] of accepted random scenes.
pub const RANDOM_SCENE_SEPARATION: f64 = 0.08;

/// Faces of the random-scene base that carry a part; at most one part each.
pub const RANDOM_SCENE_MAX_PARTS: usize = 6;

/// A random scene of `k ≤ 6` parts mounted on distinct faces of a static unit
/// box. Prismatic parts slide along their face normal by [0.15, 0.6], and only
/// on the two faces of one randomly chosen axis; revolute parts swing
/// [30°, 150°] about a line in the face plane that passes at least 0.2 from
/// every part point. Two translating parts whose relative slide is not along
/// the line joining them can be fit together by one rotation about a distant
/// axis; opposite faces rule that out, as does sliding straight off the base.
/// Draws are rejected until [`motion_separation`] reaches
/// [`RANDOM_SCENE_SEPARATION`].
pub fn random_scene(seed: u64, k: usize, points_per_part: usize) -> Result<SceneSpec> {
    if k == 0 || k > RANDOM_SCENE_MAX_PARTS {
        return Err(Error::invalid(format!(
            "random scenes have 1 to {RANDOM_SCENE_MAX_PARTS} parts, got {k}"
        )));
    }
    let mut rng = stream_rng(seed, 3);
    let normals = [
        Vec3::x(),
        -Vec3::x(),
        Vec3::z(),
        -Vec3::z(),
        Vec3::y(),
        -Vec3::y(),
    ];
    for _attempt in 0..100 {
        let mut faces = normals.to_vec();
        faces.shuffle(&mut rng);
        let slide_axis = rng.random_range(0..3);
        let mut parts = Vec::with_capacity(k);
        for (i, n) in faces.into_iter().take(k).enumerate() {
            let half = Vec3::from_fn(|_, _| rng.random_range(0.1..0.3));
            let e1 = n.cross(&least_aligned(&n)).normalize();
            let e2 = n.cross(&e1);
            let center = n * (0.6 + half.dot(&n.abs()))
                + e1 * rng.random_range(-0.2..0.2)
                + e2 * rng.random_range(-0.2..0.2);
            let primitive = Primitive::Box {
                center,
                half_extents: half,
            };
            let profile = if rng.random_bool(0.5) {
                MotionProfile::Linear
            } else {
                MotionProfile::Ease
            };
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let part = if n[slide_axis] == 0.0 || rng.random_bool(0.5) {
                let phi = rng.random_range(0.0..PI);
                let dir = e1 * phi.cos() + e2 * phi.sin();
                let reach = half.norm() + rng.random_range(0.2..0.4);
                PartSpec {
                    name: format!("part {i}"),
                    shape: shape(points_per_part, primitive),
                    joint_type: JointType::Revolute,
                    axis_direction: dir,
                    axis_point: Some(center + n.cross(&dir) * reach),
                    motion_range: (0.0, sign * rng.random_range(30.0..150.0)),
                    profile,
                }
            } else {
                PartSpec {
                    name: format!("part {i}"),
                    shape: shape(points_per_part, primitive),
                    joint_type: JointType::Prismatic,
                    axis_direction: n,
                    axis_point: None,
                    motion_range: (0.0, sign * rng.random_range(0.15..0.6)),
                    profile,
                }
            };
            parts.push(part);
        }
        let spec = SceneSpec {
            name: format!("random-{seed}-{k}"),
            base: Some(shape(
                BASE_POINTS_FACTOR * points_per_part,
                bx([0.0, 0.0, 0.0], [0.5, 0.5, 0.5]),
            )),
            parts,
            timestamps: default_timestamps(),
            noise_sigma: 0.0,
            outlier_fraction: 0.0,
            rng_seed: seed,
        };
        let (_, gt) = generate(&spec.clone().with_frames(2))?;
        if motion_separation(&spec, &gt, &[0.5, 1.0]) >= RANDOM_SCENE_SEPARATION {
            return Ok(spec);
        }
    }
    Err(Error::invalid(
        "could not draw a separable random scene in 100 attempts",
    ))
}

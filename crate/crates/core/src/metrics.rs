//! Evaluation metrics: voxel IoU, Chamfer distance, axis errors, part-motion
//! error, and predicted-to-reference part matching.

use bitvec::prelude::*;
use kiddo::{ImmutableKdTree, SquaredEuclidean};

use crate::error::{Error, Result};
use crate::geom::{rotation_angle, JointType, RigidTransform, Vec3};

/// Below this `‖â_p × â_g‖` two axes are treated as parallel.
pub const PARALLEL_TOLERANCE: f64 = 1e-6;
/// Millimetres per scene unit when scene units are metres.
pub const MM_PER_UNIT: f64 = 1000.0;

/// Binary occupancy on a regular grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    origin: Vec3,
    /// Per-axis edge length.
    voxel_size: Vec3,
    dims: [usize; 3],
    occupancy: BitVec,
}

impl VoxelGrid {
    pub fn new(origin: Vec3, voxel_size: Vec3, dims: [usize; 3]) -> Result<Self> {
        if !voxel_size.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::invalid("voxel size must be positive on every axis"));
        }
        if dims.contains(&0) {
            return Err(Error::invalid("voxel grid dimensions must be at least 1"));
        }
        Ok(Self {
            origin,
            voxel_size,
            dims,
            occupancy: bitvec![0; dims[0] * dims[1] * dims[2]],
        })
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn voxel_size(&self) -> Vec3 {
        self.voxel_size
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    fn index(&self, v: [usize; 3]) -> usize {
        (v[0] * self.dims[1] + v[1]) * self.dims[2] + v[2]
    }

    pub fn set(&mut self, v: [usize; 3]) {
        let i = self.index(v);
        self.occupancy.set(i, true);
    }

    pub fn is_occupied(&self, v: [usize; 3]) -> bool {
        self.occupancy[self.index(v)]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.count_ones()
    }

    /// Same origin, voxel size and dimensions.
    pub fn comparable(&self, other: &Self) -> bool {
        self.origin == other.origin
            && self.voxel_size == other.voxel_size
            && self.dims == other.dims
    }
}

/// `|A ∩ B| / |A ∪ B|` over occupied voxels.
pub fn voxel_iou(pred: &VoxelGrid, gt: &VoxelGrid) -> Result<f64> {
    if !pred.comparable(gt) {
        return Err(Error::invalid(
            "voxel grids differ in origin, voxel size or dimensions",
        ));
    }
    let inter = (pred.occupancy.clone() & &gt.occupancy).count_ones();
    let union = (pred.occupancy.clone() | &gt.occupancy).count_ones();
    if union == 0 {
        return Err(Error::invalid("IoU is undefined for two empty grids"));
    }
    Ok(inter as f64 / union as f64)
}

/// Occupancy of `points` on a grid spanning `bounds` with `resolution` voxels
/// per axis. Returns the grid and the number of points outside the bounds,
/// which are dropped.
///
/// Voxels are half-open `[lo, hi)`; points on the global max face go to the
/// last voxel along that axis.
pub fn voxelize(
    points: &[Vec3],
    bounds: (Vec3, Vec3),
    resolution: [usize; 3],
) -> Result<(VoxelGrid, usize)> {
    let (lo, hi) = bounds;
    let extent = hi - lo;
    if !extent.iter().all(|e| e.is_finite() && *e > 0.0) {
        return Err(Error::invalid("voxelization bounds have zero volume"));
    }
    if resolution.contains(&0) {
        return Err(Error::invalid(
            "voxel resolution must be at least 1 per axis",
        ));
    }
    let size = Vec3::from_fn(|a, _| extent[a] / resolution[a] as f64);
    let mut grid = VoxelGrid::new(lo, size, resolution)?;
    let mut clipped = 0;
    'points: for p in points {
        let mut v = [0usize; 3];
        for a in 0..3 {
            if !(p[a] >= lo[a] && p[a] <= hi[a]) {
                clipped += 1;
                continue 'points;
            }
            let k = ((p[a] - lo[a]) / size[a]).floor() as usize;
            v[a] = k.min(resolution[a] - 1);
        }
        grid.set(v);
    }
    Ok((grid, clipped))
}

/// Union bounding box of `clouds`, padded on every axis by `pad_fraction` of
/// its largest extent. `None` when all clouds are empty.
pub fn padded_bounds(clouds: &[&[Vec3]], pad_fraction: f64) -> Option<(Vec3, Vec3)> {
    let mut it = clouds.iter().flat_map(|c| c.iter());
    let first = *it.next()?;
    let (lo, hi) = it.fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
    let pad = (hi - lo).max() * pad_fraction;
    let pad = if pad > 0.0 {
        pad
    } else {
        pad_fraction.max(f64::EPSILON)
    };
    Some((lo.add_scalar(-pad), hi.add_scalar(pad)))
}

fn to_array(points: &[Vec3]) -> Vec<[f64; 3]> {
    points.iter().map(|p| [p.x, p.y, p.z]).collect()
}

fn mean_nearest(from: &[Vec3], to: &ImmutableKdTree<f64, 3>) -> f64 {
    let sum: f64 = from
        .iter()
        .map(|p| {
            to.nearest_one::<SquaredEuclidean>(&[p.x, p.y, p.z])
                .distance
                .sqrt()
        })
        .sum();
    sum / from.len() as f64
}

/// Symmetric Chamfer distance in scene units: mean nearest-neighbour distance
/// from `x` to `y` plus from `y` to `x`.
pub fn chamfer_distance(x: &[Vec3], y: &[Vec3]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::invalid(
            "Chamfer distance needs two non-empty clouds",
        ));
    }
    let tx = ImmutableKdTree::new_from_slice(&to_array(x));
    let ty = ImmutableKdTree::new_from_slice(&to_array(y));
    Ok(mean_nearest(x, &ty) + mean_nearest(y, &tx))
}

/// [`chamfer_distance`] converted to millimetres with `mm_per_unit`.
pub fn chamfer(x: &[Vec3], y: &[Vec3], mm_per_unit: f64) -> Result<f64> {
    Ok(chamfer_distance(x, y)? * mm_per_unit)
}

/// Orientation-invariant angle between two axis directions, in degrees, in `[0, 90]`.
///
/// `arccos(p·g)` evaluated as `atan2(‖p × g‖, p·g)`: the same angle for unit
/// vectors, without arccos's floor of ~1e-8 rad near parallel axes.
pub fn axis_ang_err(pred: &Vec3, gt: &Vec3) -> f64 {
    let a = pred.cross(gt).norm().atan2(pred.dot(gt)).to_degrees();
    a.min(180.0 - a)
}

/// A line `o + s·â`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisLine {
    pub point: Vec3,
    pub direction: Vec3,
}

impl AxisLine {
    pub fn new(point: Vec3, direction: Vec3) -> Result<Self> {
        if (direction.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("axis direction must be a unit vector"));
        }
        Ok(Self { point, direction })
    }
}

/// Shortest distance between two lines, in tenths of a scene unit (`10·d`).
pub fn axis_pos_err(pred: &AxisLine, gt: &AxisLine) -> f64 {
    let c = pred.direction.cross(&gt.direction);
    let n = c.norm();
    let d = if n >= PARALLEL_TOLERANCE {
        c.dot(&(pred.point - gt.point)).abs() / n
    } else {
        (gt.point - pred.point).cross(&pred.direction).norm()
    };
    10.0 * d
}

/// Revolute: geodesic angle between the two rotations, in degrees.
/// Prismatic: norm of the translation difference, in scene units.
pub fn part_motion_err(pred: &RigidTransform, gt: &RigidTransform, joint_type: JointType) -> f64 {
    match joint_type {
        JointType::Revolute => {
            rotation_angle(&(pred.rotation * gt.rotation.transpose())).to_degrees()
        }
        JointType::Prismatic => (pred.translation - gt.translation).norm(),
    }
}

/// `|A ∩ B| / |A ∪ B|` of two id sets; 0 when both are empty.
pub fn member_iou(a: &[usize], b: &[usize]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    a.dedup();
    b.sort_unstable();
    b.dedup();
    let (mut i, mut j, mut inter) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PartMatching {
    /// `(pred index, gt index, member IoU)`, ordered by gt index.
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_pred: Vec<usize>,
    pub unmatched_gt: Vec<usize>,
}

impl PartMatching {
    pub fn total_iou(&self) -> f64 {
        self.pairs.iter().map(|p| p.2).sum()
    }

    pub fn pred_for_gt(&self, gt: usize) -> Option<(usize, f64)> {
        self.pairs.iter().find(|p| p.1 == gt).map(|p| (p.0, p.2))
    }
}

/// One-to-one assignment of predicted to reference parts maximizing the summed
/// member-set IoU. Pairs that share no members are left unmatched.
pub fn match_parts(pred: &[Vec<usize>], gt: &[Vec<usize>]) -> PartMatching {
    let mut out = PartMatching::default();
    if pred.is_empty() || gt.is_empty() {
        out.unmatched_pred = (0..pred.len()).collect();
        out.unmatched_gt = (0..gt.len()).collect();
        return out;
    }
    let iou: Vec<Vec<f64>> = pred
        .iter()
        .map(|p| gt.iter().map(|g| member_iou(p, g)).collect())
        .collect();
    // Rows must not outnumber columns.
    let assignment: Vec<(usize, usize)> = if pred.len() <= gt.len() {
        let cost = iou
            .iter()
            .map(|r| r.iter().map(|v| -v).collect())
            .collect::<Vec<Vec<f64>>>();
        hungarian(&cost).into_iter().enumerate().collect()
    } else {
        let cost = (0..gt.len())
            .map(|g| (0..pred.len()).map(|p| -iou[p][g]).collect())
            .collect::<Vec<Vec<f64>>>();
        hungarian(&cost)
            .into_iter()
            .enumerate()
            .map(|(g, p)| (p, g))
            .collect()
    };
    let mut pred_used = vec![false; pred.len()];
    let mut gt_used = vec![false; gt.len()];
    for (p, g) in assignment {
        if iou[p][g] > 0.0 {
            out.pairs.push((p, g, iou[p][g]));
            pred_used[p] = true;
            gt_used[g] = true;
        }
    }
    out.pairs.sort_by_key(|p| p.1);
    out.unmatched_pred = (0..pred.len()).filter(|&i| !pred_used[i]).collect();
    out.unmatched_gt = (0..gt.len()).filter(|&i| !gt_used[i]).collect();
    out
}

/// Minimum-cost assignment of each row to a distinct column; `rows ≤ cols`.
/// Shortest augmenting path with potentials, O(rows²·cols).
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost[0].len();
    debug_assert!(n <= m);
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    // p[j]: row (1-based) assigned to column j; column 0 is a sentinel.
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut rows = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            rows[p[j] - 1] = j - 1;
        }
    }
    rows
}

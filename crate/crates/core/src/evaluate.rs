//! Scores an analysis result against ground truth, one row per part.
//!
//! Parts are matched by member-set IoU. Shape metrics run on the t = 0
//! positions of each part's members; joint metrics compare the predicted and
//! true motion over the widest analysis window.

use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::articulation::PartMobilityResult;
use crate::error::{Error, Result};
use crate::geom::{JointType, RigidTransform, Vec3};
use crate::metrics::{
    axis_ang_err, axis_pos_err, chamfer, match_parts, padded_bounds, part_motion_err, voxel_iou,
    voxelize, AxisLine, MM_PER_UNIT,
};
use crate::synth::{GroundTruth, PointLabel};
use crate::trajectory::TIME_MATCH_TOL;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    /// Voxels per axis.
    pub voxel_resolution: usize,
    /// Cap on points per cloud for Chamfer distance; larger clouds are subsampled.
    pub chamfer_samples: usize,
    /// Padding of the shared voxel box, as a fraction of its largest extent.
    pub pad_fraction: f64,
    pub mm_per_unit: f64,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            voxel_resolution: 64,
            chamfer_samples: 10_000,
            pad_fraction: 0.02,
            mm_per_unit: MM_PER_UNIT,
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.voxel_resolution == 0 || self.chamfer_samples == 0 {
            return Err(Error::invalid(
                "voxel resolution and Chamfer sample count must be positive",
            ));
        }
        if !(self.pad_fraction.is_finite() && self.pad_fraction >= 0.0) {
            return Err(Error::invalid("pad fraction must be non-negative"));
        }
        if !(self.mm_per_unit.is_finite() && self.mm_per_unit > 0.0) {
            return Err(Error::invalid("mm per unit must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartRow {
    pub gt_index: Option<usize>,
    pub gt_name: Option<String>,
    pub pred_id: Option<usize>,
    /// Ground-truth type, or the predicted type for an unmatched prediction.
    pub joint_type: Option<JointType>,
    pub matched: bool,
    pub member_iou: f64,
    /// Share of the predicted members that carry the matched part's label.
    pub purity: Option<f64>,
    /// Voxel IoU, percent; 0 when unmatched.
    pub iou_pct: f64,
    pub chamfer_mm: Option<f64>,
    pub axis_ang_deg: Option<f64>,
    /// 0.1-unit steps; revolute only.
    pub axis_pos: Option<f64>,
    /// Degrees (revolute) or scene units (prismatic).
    pub motion_err: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MeanRow {
    /// Over all ground-truth parts; unmatched ones count as 0.
    pub iou_pct: f64,
    pub chamfer_mm: Option<f64>,
    pub axis_ang_deg: Option<f64>,
    pub axis_pos: Option<f64>,
    pub motion_revolute_deg: Option<f64>,
    pub motion_prismatic: Option<f64>,
    pub purity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub scene: String,
    pub gt_parts: usize,
    pub pred_parts: usize,
    /// Ground-truth rows in part order, then unmatched predictions.
    pub rows: Vec<PartRow>,
    pub mean: MeanRow,
}

impl EvalReport {
    pub fn count_matches(&self) -> bool {
        self.gt_parts == self.pred_parts
    }

    /// Fixed-width table, one line per row plus the mean.
    pub fn table(&self) -> String {
        let opt = |v: Option<f64>, prec: usize| match v {
            Some(v) => format!("{v:.prec$}"),
            None => "-".to_owned(),
        };
        let mut s = String::new();
        writeln!(
            s,
            "scene {}: {} ground-truth parts, {} predicted",
            self.scene, self.gt_parts, self.pred_parts
        )
        .unwrap();
        writeln!(
            s,
            "{:<24} {:>5} {:>10} {:>8} {:>10} {:>10} {:>10} {:>12}  note",
            "part", "pred", "type", "IoU %", "CD mm", "Ang deg", "Pos 0.1", "Motion"
        )
        .unwrap();
        for r in &self.rows {
            let name = r
                .gt_name
                .clone()
                .unwrap_or_else(|| "(no ground truth)".to_owned());
            let motion = match (r.motion_err, r.joint_type) {
                (Some(v), Some(JointType::Revolute)) => format!("{v:.4} deg"),
                (Some(v), _) => format!("{v:.5} u"),
                (None, _) => "-".to_owned(),
            };
            writeln!(
                s,
                "{:<24} {:>5} {:>10} {:>8.2} {:>10} {:>10} {:>10} {:>12}  {}",
                name,
                r.pred_id.map_or("-".to_owned(), |p| p.to_string()),
                r.joint_type.map_or("-".to_owned(), |t| t.to_string()),
                r.iou_pct,
                opt(r.chamfer_mm, 3),
                opt(r.axis_ang_deg, 4),
                opt(r.axis_pos, 4),
                motion,
                r.note.as_deref().unwrap_or("")
            )
            .unwrap();
        }
        let m = &self.mean;
        writeln!(
            s,
            "{:<24} {:>5} {:>10} {:>8.2} {:>10} {:>10} {:>10} {:>12}  revolute {} deg, prismatic {} u",
            "mean",
            "",
            "",
            m.iou_pct,
            opt(m.chamfer_mm, 3),
            opt(m.axis_ang_deg, 4),
            opt(m.axis_pos, 4),
            "",
            opt(m.motion_revolute_deg, 4),
            opt(m.motion_prismatic, 5)
        )
        .unwrap();
        s
    }
}

/// Scores `result` against `gt`. Part-count mismatches are scored, not
/// rejected: unmatched parts get IoU 0 and a note.
pub fn evaluate(
    result: &PartMobilityResult,
    gt: &GroundTruth,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    let n = gt.start_positions.len();
    for p in &result.parts {
        if let Some(&bad) = p.member_ids.iter().find(|&&id| id >= n) {
            return Err(Error::invalid(format!(
                "part {} has member id {bad}, but the ground truth covers {n} points",
                p.id
            )));
        }
    }
    let window = result.config.ransac.windows[result.motion_window()];
    let gt_members: Vec<Vec<usize>> = (0..gt.parts.len()).map(|k| gt.part_members(k)).collect();
    let pred_members: Vec<Vec<usize>> = result.parts.iter().map(|p| p.member_ids.clone()).collect();
    let matching = match_parts(&pred_members, &gt_members);
    let cloud =
        |ids: &[usize]| -> Vec<Vec3> { ids.iter().map(|&i| gt.start_positions[i]).collect() };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut rows = Vec::with_capacity(gt.parts.len() + matching.unmatched_pred.len());
    for (k, gpart) in gt.parts.iter().enumerate() {
        let gt_type = gpart.joint.joint_type;
        let mut row = PartRow {
            gt_index: Some(k),
            gt_name: Some(gpart.name.clone()),
            pred_id: None,
            joint_type: Some(gt_type),
            matched: false,
            member_iou: 0.0,
            purity: None,
            iou_pct: 0.0,
            chamfer_mm: None,
            axis_ang_deg: None,
            axis_pos: None,
            motion_err: None,
            note: Some("unmatched".to_owned()),
        };
        if let Some((pi, member_iou)) = matching.pred_for_gt(k) {
            let part = &result.parts[pi];
            row.pred_id = Some(part.id);
            row.matched = true;
            row.member_iou = member_iou;
            row.note = None;
            let own = part
                .member_ids
                .iter()
                .filter(|&&id| gt.labels[id] == PointLabel::Part(k))
                .count();
            row.purity = Some(own as f64 / part.member_ids.len() as f64);

            let (pc, gc) = (cloud(&part.member_ids), cloud(&gt_members[k]));
            row.iou_pct = 100.0 * shape_iou(&pc, &gc, cfg)?;
            let (ps, gs) = (
                subsample(&pc, cfg.chamfer_samples, &mut rng),
                subsample(&gc, cfg.chamfer_samples, &mut rng),
            );
            row.chamfer_mm = Some(chamfer(&ps, &gs, cfg.mm_per_unit)?);

            let gt_delta = gt_window_motion(gt, k, window)?;
            row.motion_err = Some(part_motion_err(
                &part.transforms[result.motion_window()],
                &gt_delta,
                gt_type,
            ));
            match &part.joint {
                Some(pj) => {
                    row.axis_ang_deg = Some(axis_ang_err(
                        &pj.axis_direction,
                        &gpart.joint.axis_direction,
                    ));
                    if let (Some(pp), Some(gp)) = (pj.axis_position, gpart.joint.axis_position) {
                        row.axis_pos = Some(axis_pos_err(
                            &AxisLine::new(pp, pj.axis_direction)?,
                            &AxisLine::new(gp, gpart.joint.axis_direction)?,
                        ));
                    }
                    if pj.joint_type != gt_type {
                        row.note = Some(format!("predicted {}", pj.joint_type));
                    }
                }
                None => row.note = Some("no joint recovered".to_owned()),
            }
        }
        rows.push(row);
    }
    for &pi in &matching.unmatched_pred {
        let part = &result.parts[pi];
        rows.push(PartRow {
            gt_index: None,
            gt_name: None,
            pred_id: Some(part.id),
            joint_type: part.joint.map(|j| j.joint_type),
            matched: false,
            member_iou: 0.0,
            purity: None,
            iou_pct: 0.0,
            chamfer_mm: None,
            axis_ang_deg: None,
            axis_pos: None,
            motion_err: None,
            note: Some("unmatched prediction".to_owned()),
        });
    }

    let gt_rows = &rows[..gt.parts.len()];
    let mean_of = |f: &dyn Fn(&PartRow) -> Option<f64>| -> Option<f64> {
        let v: Vec<f64> = gt_rows.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let of_type = |t: JointType| {
        move |r: &PartRow| {
            if r.joint_type == Some(t) {
                r.motion_err
            } else {
                None
            }
        }
    };
    let mean = MeanRow {
        iou_pct: if gt_rows.is_empty() {
            0.0
        } else {
            gt_rows.iter().map(|r| r.iou_pct).sum::<f64>() / gt_rows.len() as f64
        },
        chamfer_mm: mean_of(&|r| r.chamfer_mm),
        axis_ang_deg: mean_of(&|r| r.axis_ang_deg),
        axis_pos: mean_of(&|r| r.axis_pos),
        motion_revolute_deg: mean_of(&of_type(JointType::Revolute)),
        motion_prismatic: mean_of(&of_type(JointType::Prismatic)),
        purity: mean_of(&|r| r.purity),
    };
    Ok(EvalReport {
        scene: gt.scene.clone(),
        gt_parts: gt.parts.len(),
        pred_parts: result.parts.len(),
        rows,
        mean,
    })
}

fn shape_iou(pred: &[Vec3], gt: &[Vec3], cfg: &EvalConfig) -> Result<f64> {
    let bounds = padded_bounds(&[pred, gt], cfg.pad_fraction)
        .ok_or_else(|| Error::invalid("empty part clouds"))?;
    let res = [cfg.voxel_resolution; 3];
    let (vp, _) = voxelize(pred, bounds, res)?;
    let (vg, _) = voxelize(gt, bounds, res)?;
    voxel_iou(&vp, &vg)
}

fn subsample(points: &[Vec3], cap: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    if points.len() <= cap {
        points.to_vec()
    } else {
        points.choose_multiple(rng, cap).copied().collect()
    }
}

/// Ground-truth motion of part `k` over `(a, b)`; both times must be frames.
fn gt_window_motion(gt: &GroundTruth, k: usize, (a, b): (f64, f64)) -> Result<RigidTransform> {
    let frame = |t: f64| {
        gt.timestamps
            .iter()
            .position(|&s| (s - t).abs() <= TIME_MATCH_TOL)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "motion window time {t} is not a ground-truth timestamp"
                ))
            })
    };
    let poses = &gt.parts[k].poses;
    let (pa, pb) = (poses[frame(a)?], poses[frame(b)?]);
    Ok(compose(&pb, &pa.inverse()))
}

fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    RigidTransform {
        rotation: a.rotation * b.rotation,
        translation: a.rotation * b.translation + a.translation,
    }
}

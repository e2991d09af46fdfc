//! Least-squares rigid registration of corresponded point sets and the
//! per-point residuals used to score motion hypotheses.

use nalgebra::{Matrix3, Matrix3xX};

use crate::error::{Error, Result};
use crate::geom::{Mat3, RigidTransform, Vec3};

/// Ratio of second to largest singular value below which a centered point set
/// counts as collinear.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// Paired positions of the same points at two times; `source[i]` ↔ `target[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrespondenceSet {
    source: Vec<Vec3>,
    target: Vec<Vec3>,
}

impl CorrespondenceSet {
    pub fn new(source: Vec<Vec3>, target: Vec<Vec3>) -> Result<Self> {
        if source.len() != target.len() {
            return Err(Error::invalid(format!(
                "correspondence lengths differ: {} source vs {} target",
                source.len(),
                target.len()
            )));
        }
        if source.len() < 3 {
            return Err(Error::invalid(format!(
                "need at least 3 correspondences, got {}",
                source.len()
            )));
        }
        Ok(Self { source, target })
    }

    pub fn source(&self) -> &[Vec3] {
        &self.source
    }

    pub fn target(&self) -> &[Vec3] {
        &self.target
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }
}

/// Optimal rigid transform minimizing `Σ ‖target_i − (R·source_i + t)‖²`.
pub fn kabsch_fit(corr: &CorrespondenceSet) -> Result<RigidTransform> {
    fit(&corr.source, &corr.target)
}

fn centroid(points: &[Vec3]) -> Vec3 {
    points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / points.len() as f64
}

/// Kabsch on parallel slices. Callers guarantee equal lengths ≥ 3.
pub(crate) fn fit(source: &[Vec3], target: &[Vec3]) -> Result<RigidTransform> {
    debug_assert_eq!(source.len(), target.len());
    let cs = centroid(source);
    let ct = centroid(target);

    check_rank(source, &cs)?;

    let mut h = Mat3::zeros();
    for (s, d) in source.iter().zip(target) {
        h += (s - cs) * (d - ct).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd
        .u
        .ok_or_else(|| Error::RankDeficient("SVD did not converge".into()))?;
    let v = svd
        .v_t
        .ok_or_else(|| Error::RankDeficient("SVD did not converge".into()))?
        .transpose();
    let d = (v * u.transpose()).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d));
    let rotation = v * correction * u.transpose();
    Ok(RigidTransform {
        rotation,
        translation: ct - rotation * cs,
    })
}

/// Rejects coincident or collinear sets: the centered points must span a plane.
fn check_rank(points: &[Vec3], center: &Vec3) -> Result<()> {
    let sv = if points.len() == 3 {
        let m =
            Matrix3::from_columns(&[points[0] - center, points[1] - center, points[2] - center]);
        let s = m.singular_values();
        [s[0], s[1], s[2]]
    } else {
        let cols: Vec<Vec3> = points.iter().map(|p| p - center).collect();
        let s = Matrix3xX::from_columns(&cols).singular_values();
        [s[0], s[1], s[2]]
    };
    let mut s = sv;
    s.sort_by(|a, b| b.total_cmp(a));
    if !(s[0] > 0.0) || s[1] < RANK_TOLERANCE * s[0] {
        return Err(Error::RankDeficient(format!(
            "source points are {} (singular values {:.3e}, {:.3e})",
            if s[0] > 0.0 {
                "collinear"
            } else {
                "coincident"
            },
            s[0],
            s[1]
        )));
    }
    Ok(())
}

/// Per-point error `‖target_i − (R·source_i + t)‖`.
pub fn residual(transform: &RigidTransform, corr: &CorrespondenceSet) -> Vec<f64> {
    corr.source
        .iter()
        .zip(&corr.target)
        .map(|(s, d)| (d - transform.apply(s)).norm())
        .collect()
}

/// Per-point error averaged over several windows of the same point set.
pub fn mean_residual(
    transforms: &[RigidTransform],
    windows: &[CorrespondenceSet],
) -> Result<Vec<f64>> {
    if transforms.len() != windows.len() {
        return Err(Error::invalid(format!(
            "{} transforms for {} windows",
            transforms.len(),
            windows.len()
        )));
    }
    let Some(first) = windows.first() else {
        return Err(Error::invalid("at least one window is required"));
    };
    let n = first.len();
    if let Some((w, bad)) = windows.iter().enumerate().find(|(_, w)| w.len() != n) {
        return Err(Error::invalid(format!(
            "window {w} has {} points, window 0 has {n}",
            bad.len()
        )));
    }
    let mut acc = vec![0.0; n];
    for (t, w) in transforms.iter().zip(windows) {
        for (a, e) in acc.iter_mut().zip(residual(t, w)) {
            *a += e;
        }
    }
    let count = windows.len() as f64;
    Ok(acc.into_iter().map(|s| s / count).collect())
}

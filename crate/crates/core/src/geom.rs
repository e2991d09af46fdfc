//! Rigid-transform algebra and the closed-form decomposition of a rigid motion
//! into joint parameters.
//!
//! Rotations are carried as plain 3×3 matrices. Axis-angle pairs are
//! canonicalized to an angle in `[0, π]`; the opposite pair `(-u, -θ)` describes
//! the same rotation and is never produced.

use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Default revolute/prismatic split: 10 degrees.
pub const DEFAULT_REVOLUTE_THRESHOLD: f64 = 10.0 * std::f64::consts::PI / 180.0;

/// Axis reported for a zero-angle rotation, where any axis is valid.
pub const DEFAULT_AXIS: Vec3 = Vector3::new(0.0, 0.0, 1.0);

const ORTHONORMAL_TOL: f64 = 1e-9;
const UNIT_AXIS_TOL: f64 = 1e-6;

/// A proper rigid motion `x ↦ R·x + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl RigidTransform {
    /// Builds a transform, rejecting rotations that are not orthonormal with
    /// determinant +1 (entrywise tolerance 1e-9).
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        if !is_rotation(&rotation, ORTHONORMAL_TOL) {
            return Err(Error::invalid("rotation is not orthonormal with det +1"));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("translation has non-finite entries"));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self {
            rotation: Mat3::identity(),
            translation,
        }
    }

    /// Rotation by `angle` about the line through `point` with direction `axis`.
    pub fn about_line(axis: &Vec3, point: &Vec3, angle: f64) -> Result<Self> {
        let rotation = compose_rotation(axis, angle)?;
        Ok(Self {
            rotation,
            translation: point - rotation * point,
        })
    }

    #[inline]
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn is_valid(&self) -> bool {
        is_rotation(&self.rotation, ORTHONORMAL_TOL)
            && self.translation.iter().all(|v| v.is_finite())
    }
}

impl Mul for RigidTransform {
    type Output = RigidTransform;

    /// `(a * b).apply(x) == a.apply(b.apply(x))`
    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation * rhs.translation + self.translation,
        }
    }
}

/// True when `m` is orthonormal with determinant +1 within `tol` per entry.
pub fn is_rotation(m: &Mat3, tol: f64) -> bool {
    if !m.iter().all(|v| v.is_finite()) {
        return false;
    }
    let gram = m.transpose() * m - Mat3::identity();
    gram.iter().all(|v| v.abs() <= tol) && (m.determinant() - 1.0).abs() <= tol
}

/// Cross-product matrix `[v]×`.
pub fn skew(v: &Vec3) -> Mat3 {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointType {
    Revolute,
    Prismatic,
}

impl std::fmt::Display for JointType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            JointType::Revolute => f.write_str("revolute"),
            JointType::Prismatic => f.write_str("prismatic"),
        }
    }
}

/// Articulation recovered from one part's rigid motion.
///
/// `axis_position` is the axis point closest to the origin for revolute joints
/// and `None` for prismatic joints. Compare axis lines by point-to-line
/// distance, never by raw `axis_position` equality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointParams {
    pub joint_type: JointType,
    pub axis_direction: Vec3,
    pub axis_position: Option<Vec3>,
    /// Rotation angle in radians, `[0, π]`.
    pub angle: f64,
    /// Translation distance, `≥ 0`.
    pub distance: f64,
}

/// Rodrigues: `cosθ·I + sinθ·[u]× + (1−cosθ)·u⊗u`.
pub fn compose_rotation(axis: &Vec3, angle: f64) -> Result<Mat3> {
    let norm = axis.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_AXIS_TOL {
        return Err(Error::invalid(format!(
            "rotation axis must be a unit vector (norm {norm})"
        )));
    }
    if !angle.is_finite() {
        return Err(Error::invalid("rotation angle must be finite"));
    }
    Ok(rodrigues(&(axis / norm), angle))
}

pub(crate) fn rodrigues(u: &Vec3, angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::identity() * c + skew(u) * s + (u * u.transpose()) * (1.0 - c)
}

/// `2·sinθ·u` read off the antisymmetric part of `r`.
#[inline]
fn antisymmetric_vector(r: &Mat3) -> Vec3 {
    Vec3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    )
}

/// Rotation angle of `r` in `[0, π]`.
///
/// Equal to `arccos((tr r − 1)/2)` but evaluated through `atan2`, which keeps
/// full precision near 0 and π where `arccos` loses half the digits.
pub fn rotation_angle(r: &Mat3) -> f64 {
    let cos2 = r.trace() - 1.0;
    let sin2 = antisymmetric_vector(r).norm();
    sin2.atan2(cos2)
}

/// Splits a rotation into `(unit axis, angle)` with the angle in `[0, π]`.
///
/// A zero-angle rotation returns [`DEFAULT_AXIS`]. Past π/2 the axis is read
/// from the symmetric part `(R + Rᵀ)/2 − cosθ·I = (1 − cosθ)·u⊗u`, i.e. the
/// +1 eigenvector of `R`, and its sign is taken from the antisymmetric part.
/// At exactly π the sign is fixed so the largest-magnitude component is positive.
pub fn decompose_rotation(r: &Mat3) -> (Vec3, f64) {
    let angle = rotation_angle(r);
    let v = antisymmetric_vector(r);
    let vnorm = v.norm();

    if angle <= std::f64::consts::FRAC_PI_2 {
        if vnorm == 0.0 {
            return (DEFAULT_AXIS, 0.0);
        }
        return (v / vnorm, angle);
    }

    let cos = angle.cos();
    let sym = (r + r.transpose()) * 0.5 - Mat3::identity() * cos;
    let diag = sym.diagonal();
    let j = diag.imax();
    let mut u: Vec3 = sym.column(j).into_owned();
    let n = u.norm();
    if n == 0.0 {
        return (DEFAULT_AXIS, angle);
    }
    u /= n;
    let d = u.dot(&v);
    // At exactly π the sign is free; make the largest component positive.
    if d < 0.0 || (d == 0.0 && u[u.iamax()] < 0.0) {
        u = -u;
    }
    (u, angle)
}

/// Recovers joint parameters from a part's motion using the default 10° split.
pub fn extract_joint(transform: &RigidTransform) -> Result<JointParams> {
    extract_joint_with_threshold(transform, DEFAULT_REVOLUTE_THRESHOLD)
}

/// Recovers joint parameters from a part's motion.
///
/// Revolute when the rotation angle exceeds `revolute_threshold`; the axis
/// point is the minimum-norm least-squares solution of
/// `(R − I)·p = (u·t)·u − t`, which is the axis point nearest the origin.
/// Prismatic otherwise, with direction `t/‖t‖` and distance `‖t‖`.
pub fn extract_joint_with_threshold(
    transform: &RigidTransform,
    revolute_threshold: f64,
) -> Result<JointParams> {
    if !(revolute_threshold.is_finite() && revolute_threshold >= 0.0) {
        return Err(Error::invalid(
            "revolute threshold must be finite and non-negative",
        ));
    }
    let (u, angle) = decompose_rotation(&transform.rotation);
    let t = transform.translation;

    if angle > revolute_threshold {
        let along = u.dot(&t);
        let rhs = u * along - t;
        let p = min_norm_solve(&(transform.rotation - Mat3::identity()), &rhs);
        return Ok(JointParams {
            joint_type: JointType::Revolute,
            axis_direction: u,
            axis_position: Some(p),
            angle,
            distance: along.abs(),
        });
    }

    let dist = t.norm();
    if dist < 1e-9 {
        return Err(Error::DegenerateMotion(format!(
            "rotation {angle:.3e} rad and translation {dist:.3e}; no joint is recoverable"
        )));
    }
    Ok(JointParams {
        joint_type: JointType::Prismatic,
        axis_direction: t / dist,
        axis_position: None,
        angle,
        distance: dist,
    })
}

/// Minimum-norm least-squares solve for `R − I`, which has rank 2 for any
/// non-trivial rotation: the smallest singular direction is dropped outright.
fn min_norm_solve(a: &Mat3, b: &Vec3) -> Vec3 {
    let svd = a.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let s = svd.singular_values;
    let smallest = s.imin();
    let mut x = Vec3::zeros();
    for k in 0..3 {
        if k == smallest || s[k] <= f64::EPSILON * s.max() {
            continue;
        }
        let coeff = u.column(k).dot(b) / s[k];
        x += vt.row(k).transpose() * coeff;
    }
    x
}

/// Distance from `q` to the line `{p + s·u}`; `u` must be unit length.
pub fn point_line_distance(q: &Vec3, p: &Vec3, u: &Vec3) -> f64 {
    (q - p).cross(u).norm()
}

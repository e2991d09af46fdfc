//! Rigid-part segmentation and articulation recovery from 3D point trajectories.
//!
//! [`analyze`] splits a [`TrajectorySet`] into rigidly moving parts with
//! sequential RANSAC and reports each part's joint. [`synth`] builds labelled
//! scenes to test against, [`metrics`] and [`evaluate`] score the output, and
//! [`io`] reads and writes the interchange files.

// `!(x > 0.0)` is used on purpose: unlike `x <= 0.0` it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod articulation;
pub mod error;
pub mod evaluate;
pub mod geom;
pub mod io;
pub mod kabsch;
pub mod metrics;
pub mod ransac;
pub mod sdmd;
pub mod synth;
pub mod trajectory;

pub use articulation::{
    analyze, analyze_normalized, AnalysisConfig, Normalization, Part, PartMobilityResult,
};
pub use error::{Error, Result};
pub use evaluate::{evaluate, EvalConfig, EvalReport};
pub use geom::{extract_joint, JointParams, JointType, Mat3, RigidTransform, Vec3};
pub use ransac::{PartHypothesis, RansacConfig};
pub use sdmd::{detect_static, SdmdConfig, SdmdOutcome};
pub use synth::{generate, GroundTruth, PointLabel, SceneSpec};
pub use trajectory::TrajectorySet;

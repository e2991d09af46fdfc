#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use articulate::sdmd::SdmdOutcome;
use articulate::trajectory::uniform_timestamps;
use articulate::{RigidTransform, TrajectorySet, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn articulate(args: &[&str], cwd: &Path, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_articulate"));
    cmd.args(args).current_dir(cwd).env_remove("AIM_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("failed to launch articulate")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// The closing machine-readable line.
pub fn summary(out: &Output) -> serde_json::Value {
    let text = stdout(out);
    let last = text.lines().last().expect("empty stdout");
    serde_json::from_str(last).unwrap_or_else(|e| panic!("{e}: {last}"))
}

/// A static box and a door hinged on the z-parallel line through
/// `(0.5, 0, 0)`, opening 90°. Besides the panel, the door carries points
/// within 0.001 of the hinge line; they barely move.
pub struct HingeFixture {
    pub trajectories: TrajectorySet,
    /// Ground truth: does trajectory `i` belong to the door?
    pub moving: Vec<bool>,
    pub near_axis: Vec<usize>,
}

pub fn hinge_fixture(seed: u64) -> HingeFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pivot = Vec3::new(0.5, 0.0, 0.0);
    let mut u = |lo: f64, hi: f64| rng.random_range(lo..hi);
    let mut starts = Vec::new();
    let mut moving = Vec::new();
    let mut near_axis = Vec::new();
    for _ in 0..2000 {
        starts.push(Vec3::new(u(-0.6, 0.45), u(-0.3, 0.3), u(-0.5, 0.5)));
        moving.push(false);
    }
    for _ in 0..800 {
        starts.push(Vec3::new(u(0.52, 1.3), u(-0.02, 0.02), u(-0.5, 0.5)));
        moving.push(true);
    }
    for _ in 0..60 {
        let (r, phi) = (u(1e-5, 1e-3), u(0.0, std::f64::consts::TAU));
        near_axis.push(starts.len());
        starts.push(pivot + Vec3::new(r * phi.cos(), r * phi.sin(), u(-0.5, 0.5)));
        moving.push(true);
    }
    let times = uniform_timestamps(21);
    let tracks = starts
        .iter()
        .zip(&moving)
        .map(|(p, &m)| {
            times
                .iter()
                .map(|&t| {
                    if m {
                        RigidTransform::about_line(
                            &Vec3::z(),
                            &pivot,
                            std::f64::consts::FRAC_PI_2 * t,
                        )
                        .unwrap()
                        .apply(p)
                    } else {
                        *p
                    }
                })
                .collect()
        })
        .collect();
    HingeFixture {
        trajectories: TrajectorySet::from_tracks(times, tracks).unwrap(),
        moving,
        near_axis,
    }
}

impl HingeFixture {
    /// Door points called static plus box points called moving.
    pub fn misclassified(&self, out: &SdmdOutcome) -> usize {
        let static_wrong = out.static_ids.iter().filter(|&&i| self.moving[i]).count();
        let moving_wrong = out.moving_ids.iter().filter(|&&i| !self.moving[i]).count();
        static_wrong + moving_wrong
    }
}

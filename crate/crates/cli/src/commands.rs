use std::fmt::Display;
use std::path::Path;

use articulate::evaluate::EvalReport;
use articulate::io::{
    read_ground_truth, read_json, read_result, read_trajectories, write_ground_truth, write_json,
    write_result, write_trajectories,
};
use articulate::synth::{builtin_scene, builtin_scene_with_ranges, RANGELESS};
use articulate::{
    analyze, analyze_normalized, detect_static, evaluate, generate, AnalysisConfig, EvalConfig,
    GroundTruth, JointParams, JointType, PartMobilityResult, SceneSpec, SdmdConfig,
};
use serde::Serialize;
use serde_json::json;

use crate::{AnalyzeArgs, Cli, Command, DemoArgs, EvalArgs, Failure, Pairs, SdmdArgs, SynthArgs};

/// Human-readable lines go through `say`, which `--quiet` silences; `finish`
/// always prints the closing JSON line.
struct Out {
    quiet: bool,
}

impl Out {
    fn say(&self, line: impl Display) {
        if !self.quiet {
            println!("{line}");
        }
    }

    fn finish(&self, summary: serde_json::Value) {
        println!("{summary}");
    }
}

pub(crate) fn run(cli: &Cli) -> Result<(), Failure> {
    let out = Out { quiet: cli.quiet };
    let output = cli.output.as_deref();
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a, cli.seed, output, &out),
        Command::Sdmd(a) => cmd_sdmd(a, cli.seed, output, &out),
        Command::Synth(a) => cmd_synth(a, cli.seed, output, &out),
        Command::Eval(a) => cmd_eval(a, cli.seed, output, &out),
        Command::Demo(a) => cmd_demo(a, cli.seed, output, &out),
    }
}

fn path_value(p: Option<&Path>) -> serde_json::Value {
    p.map_or(serde_json::Value::Null, |p| json!(p.display().to_string()))
}

fn joint_summary(joint: Option<&JointParams>) -> String {
    let Some(j) = joint else {
        return "no joint (no motion)".to_owned();
    };
    let a = j.axis_direction;
    let dir = format!("axis ({:.4}, {:.4}, {:.4})", a.x, a.y, a.z);
    match (j.joint_type, j.axis_position) {
        (JointType::Revolute, Some(p)) => format!(
            "revolute, angle {:.2}°, {dir} through ({:.4}, {:.4}, {:.4})",
            j.angle.to_degrees(),
            p.x,
            p.y,
            p.z
        ),
        (JointType::Revolute, None) => {
            format!("revolute, angle {:.2}°, {dir}", j.angle.to_degrees())
        }
        (JointType::Prismatic, _) => format!("prismatic, distance {:.4}, {dir}", j.distance),
    }
}

fn joint_type_name(joint: Option<&JointParams>) -> String {
    joint.map_or("none".to_owned(), |j| j.joint_type.to_string())
}

fn print_parts(result: &PartMobilityResult, out: &Out) {
    out.say(format_args!("parts: {}", result.parts.len()));
    for p in &result.parts {
        out.say(format_args!(
            "part {}: {}, {} members, residual {:.2e}",
            p.id,
            joint_summary(p.joint.as_ref()),
            p.member_ids.len(),
            p.mean_residual
        ));
    }
    out.say(format_args!(
        "static: {}, unassigned: {}",
        result.static_ids.len(),
        result.unassigned_ids.len()
    ));
    for d in &result.diagnostics {
        eprintln!("note: {d}");
    }
}

fn analyze_config(a: &AnalyzeArgs, seed: Option<u64>) -> AnalysisConfig {
    let mut cfg = AnalysisConfig::default();
    let r = &mut cfg.ransac;
    if let Some(v) = a.inlier_threshold {
        r.inlier_threshold = v;
    }
    if let Some(w) = &a.windows {
        r.windows = w.0.clone();
    }
    if let Some(v) = a.min_support {
        r.min_support = v;
    }
    if let Some(v) = a.samples {
        r.samples_per_model = v;
    }
    if let Some(v) = a.max_models {
        r.max_models = v;
    }
    // The static filter groups with the same fitting parameters.
    let r = cfg.ransac.clone();
    cfg.sdmd = (!a.no_sdmd).then(|| SdmdConfig {
        inlier_threshold: r.inlier_threshold,
        samples_per_model: r.samples_per_model,
        max_models: r.max_models,
        min_support: r.min_support,
        min_support_fraction: r.min_support_fraction,
        ..SdmdConfig::default()
    });
    cfg.with_seed(seed.unwrap_or(0))
}

fn cmd_analyze(
    a: &AnalyzeArgs,
    seed: Option<u64>,
    output: Option<&Path>,
    out: &Out,
) -> Result<(), Failure> {
    let cfg = analyze_config(a, seed);
    cfg.validate()?;
    let traj = read_trajectories(&a.input)?;
    let result = if a.normalize {
        analyze_normalized(&traj, &cfg)?
    } else {
        analyze(&traj, &cfg)?
    };
    if let Some(path) = output {
        write_result(&result, path)?;
    }
    print_parts(&result, out);
    if let Some(n) = &result.normalization {
        out.say(format_args!("normalized: scale {:.6}", n.scale));
    }
    out.finish(json!({
        "command": "analyze",
        "parts": result.parts.len(),
        "joint_types": result.parts.iter().map(|p| joint_type_name(p.joint.as_ref())).collect::<Vec<_>>(),
        "static": result.static_ids.len(),
        "unassigned": result.unassigned_ids.len(),
        "output": path_value(output),
    }));
    Ok(())
}

#[derive(Serialize)]
struct SdmdDoc<'a> {
    config: &'a SdmdConfig,
    static_ids: &'a [usize],
    moving_ids: &'a [usize],
    notes: &'a [String],
}

fn cmd_sdmd(
    a: &SdmdArgs,
    seed: Option<u64>,
    output: Option<&Path>,
    out: &Out,
) -> Result<(), Failure> {
    let mut cfg = SdmdConfig {
        sample_times: a.times.0.clone(),
        static_angle_max: a.angle_max,
        static_translation_max: a.trans_max,
        rng_seed: seed.unwrap_or(0),
        ..SdmdConfig::default()
    };
    if let Some(v) = a.inlier_threshold {
        cfg.inlier_threshold = v;
    }
    if let Some(v) = a.samples {
        cfg.samples_per_model = v;
    }
    cfg.validate()?;
    let mut notes = Vec::new();
    if cfg.sample_times.len() == 2 {
        notes.push(
            "two sample times: a part that returns to its start pose at the last time, \
             or moves too little by then, is judged static; sample an intermediate time \
             for more robust classification"
                .to_owned(),
        );
    }
    for n in &notes {
        eprintln!("note: {n}");
    }
    let traj = read_trajectories(&a.input)?;
    let res = detect_static(&traj, &cfg)?;
    if let Some(path) = output {
        write_json(
            &SdmdDoc {
                config: &cfg,
                static_ids: &res.static_ids,
                moving_ids: &res.moving_ids,
                notes: &notes,
            },
            path,
        )?;
    }
    out.say(format_args!(
        "static: {}, moving: {} (of {} trajectories)",
        res.static_ids.len(),
        res.moving_ids.len(),
        traj.len()
    ));
    out.finish(json!({
        "command": "sdmd",
        "static": res.static_ids.len(),
        "moving": res.moving_ids.len(),
        "output": path_value(output),
    }));
    Ok(())
}

fn catalog_scene(name: &str, ranges: Option<&Pairs>) -> Result<SceneSpec, Failure> {
    match ranges {
        Some(r) => Ok(builtin_scene_with_ranges(name, &r.0)?),
        None if RANGELESS.contains(&name) => Err(Failure::Usage(format!(
            "scene '{name}' has no reference motion ranges; pass --ranges with one a:b pair per part"
        ))),
        None => Ok(builtin_scene(name)?),
    }
}

struct SceneOverrides {
    noise: Option<f64>,
    outliers: Option<f64>,
    frames: Option<usize>,
    points: Option<usize>,
    seed: Option<u64>,
}

impl SceneOverrides {
    fn apply(&self, mut spec: SceneSpec) -> SceneSpec {
        if let Some(v) = self.noise {
            spec = spec.with_noise(v);
        }
        if let Some(v) = self.outliers {
            spec = spec.with_outliers(v);
        }
        if let Some(v) = self.frames {
            spec = spec.with_frames(v);
        }
        if let Some(v) = self.points {
            spec = spec.with_points_per_part(v);
        }
        if let Some(v) = self.seed {
            spec = spec.with_seed(v);
        }
        spec
    }
}

fn describe_scene(spec: &SceneSpec, gt: &GroundTruth, out: &Out) {
    out.say(format_args!(
        "scene {}: moving parts {}, points {}, frames {}",
        spec.name,
        gt.parts.len(),
        gt.labels.len(),
        gt.timestamps.len()
    ));
    for (k, p) in gt.parts.iter().enumerate() {
        let (lo, hi) = p.motion_range;
        let range = match p.joint.joint_type {
            JointType::Revolute => format!("{lo}° → {hi}°"),
            JointType::Prismatic => format!("{lo} → {hi}"),
        };
        out.say(format_args!(
            "part {k} {}: {}, {range}",
            p.name, p.joint.joint_type
        ));
    }
    for w in spec.warnings(AnalysisConfig::default().ransac.min_support) {
        eprintln!("warning: {w}");
    }
}

fn cmd_synth(
    a: &SynthArgs,
    seed: Option<u64>,
    output: Option<&Path>,
    out: &Out,
) -> Result<(), Failure> {
    let Some(output) = output else {
        return Err(Failure::Usage(
            "synth needs --output for the trajectory file".to_owned(),
        ));
    };
    let gt_path =
        a.gt.clone()
            .unwrap_or_else(|| output.with_extension("gt.json"));
    if gt_path == output {
        return Err(Failure::Usage(
            "ground-truth path must differ from the trajectory path".to_owned(),
        ));
    }
    let base = match (&a.scene, &a.spec) {
        (Some(name), _) => catalog_scene(name, a.ranges.as_ref())?,
        (None, Some(path)) => {
            if a.ranges.is_some() {
                return Err(Failure::Usage(
                    "--ranges applies to built-in scenes only".to_owned(),
                ));
            }
            read_json::<SceneSpec>(path)?
        }
        (None, None) => unreachable!("clap requires --scene or --spec"),
    };
    let spec = SceneOverrides {
        noise: a.noise,
        outliers: a.outliers,
        frames: a.frames,
        points: a.points,
        seed,
    }
    .apply(base);
    spec.validate()?;
    let (traj, gt) = generate(&spec)?;
    write_trajectories(&traj, output, a.encoding)?;
    write_ground_truth(&gt, &gt_path)?;
    describe_scene(&spec, &gt, out);
    out.finish(json!({
        "command": "synth",
        "scene": spec.name,
        "parts": gt.parts.len(),
        "points": traj.len(),
        "frames": traj.num_frames(),
        "trajectories": output.display().to_string(),
        "ground_truth": gt_path.display().to_string(),
    }));
    Ok(())
}

fn eval_summary(command: &str, report: &EvalReport, output: Option<&Path>) -> serde_json::Value {
    json!({
        "command": command,
        "scene": report.scene,
        "gt_parts": report.gt_parts,
        "pred_parts": report.pred_parts,
        "mean": report.mean,
        "output": path_value(output),
    })
}

fn cmd_eval(
    a: &EvalArgs,
    seed: Option<u64>,
    output: Option<&Path>,
    out: &Out,
) -> Result<(), Failure> {
    let cfg = EvalConfig {
        voxel_resolution: a.voxel_res,
        chamfer_samples: a.chamfer_samples,
        seed: seed.unwrap_or(0),
        ..EvalConfig::default()
    };
    cfg.validate()?;
    let result = read_result(&a.pred)?;
    let gt = read_ground_truth(&a.gt)?;
    let report = evaluate(&result, &gt, &cfg)?;
    if let Some(path) = output {
        write_json(&report, path)?;
    }
    out.say(report.table().trim_end());
    out.finish(eval_summary("eval", &report, output));
    Ok(())
}

fn cmd_demo(
    a: &DemoArgs,
    seed: Option<u64>,
    output: Option<&Path>,
    out: &Out,
) -> Result<(), Failure> {
    let spec = SceneOverrides {
        noise: Some(a.noise),
        outliers: a.outliers,
        frames: a.frames,
        points: a.points,
        seed,
    }
    .apply(catalog_scene(&a.scene, a.ranges.as_ref())?);
    spec.validate()?;
    let cfg = AnalysisConfig::default().with_seed(seed.unwrap_or(0));
    let eval_cfg = EvalConfig {
        seed: seed.unwrap_or(0),
        ..EvalConfig::default()
    };

    let (traj, gt) = generate(&spec)?;
    describe_scene(&spec, &gt, out);
    let result = analyze(&traj, &cfg)?;
    print_parts(&result, out);
    let report = evaluate(&result, &gt, &eval_cfg)?;
    if let Some(path) = output {
        write_json(&report, path)?;
    }
    out.say(report.table().trim_end());
    let mut summary = eval_summary("demo", &report, output);
    summary["joint_types"] = json!(result
        .parts
        .iter()
        .map(|p| joint_type_name(p.joint.as_ref()))
        .collect::<Vec<_>>());
    out.finish(summary);
    Ok(())
}

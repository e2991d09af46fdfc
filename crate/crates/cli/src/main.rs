//! `articulate`: rigid-part segmentation and joint recovery from point
//! trajectories.
//!
//! Every subcommand prints a human-readable report followed by one compact
//! JSON line; `--quiet` keeps only that last line. Exit codes: 0 success,
//! 1 internal or numeric failure, 2 usage or validation error.

use std::path::PathBuf;
use std::process::ExitCode;

use articulate::io::Encoding;
use clap::{ArgGroup, Args, Parser, Subcommand};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "articulate", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every random choice; identical seeds give identical output.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Where to write the command's document.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Print only the final machine-readable line.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment trajectories into rigid parts and recover their joints.
    Analyze(AnalyzeArgs),
    /// Split trajectories into static and moving sets.
    Sdmd(SdmdArgs),
    /// Generate a synthetic scene: a trajectory file and its ground truth.
    Synth(SynthArgs),
    /// Score a result file against ground truth.
    Eval(EvalArgs),
    /// Generate, analyze and score a scene in one go.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Trajectory file (AIMT, text or binary).
    #[arg(long)]
    input: PathBuf,
    /// Window-averaged residual below which a trajectory joins a model.
    #[arg(long, allow_negative_numbers = true)]
    inlier_threshold: Option<f64>,
    /// Time windows as `a:b,c:d` in normalized time.
    #[arg(long, value_parser = parse_pairs)]
    windows: Option<Pairs>,
    /// Smallest trajectory count accepted as a part.
    #[arg(long)]
    min_support: Option<usize>,
    /// Minimal samples drawn per extracted model.
    #[arg(long)]
    samples: Option<usize>,
    /// Upper bound on extracted models.
    #[arg(long)]
    max_models: Option<usize>,
    /// Skip the static pre-filter.
    #[arg(long)]
    no_sdmd: bool,
    /// Rescale the input to a unit bounding box before thresholding.
    #[arg(long)]
    normalize: bool,
}

#[derive(Debug, Args)]
struct SdmdArgs {
    #[arg(long)]
    input: PathBuf,
    /// Sample times as `0,t1,t2,...`; the first must be 0.
    #[arg(long, value_parser = parse_times, default_value = "0,0.5,1")]
    times: Times,
    /// Largest rotation angle of a static group, radians.
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    angle_max: f64,
    /// Largest translation of a static group, scene units.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    trans_max: f64,
    #[arg(long, allow_negative_numbers = true)]
    inlier_threshold: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["scene", "spec"])))]
struct SynthArgs {
    /// Built-in scene name.
    #[arg(long)]
    scene: Option<String>,
    /// Scene description in JSON.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Standard deviation of per-frame Gaussian noise, scene units.
    #[arg(long, allow_negative_numbers = true)]
    noise: Option<f64>,
    /// Fraction of points replaced by random walks.
    #[arg(long, allow_negative_numbers = true)]
    outliers: Option<f64>,
    /// Number of uniformly spaced frames.
    #[arg(long)]
    frames: Option<usize>,
    /// Points per moving part; the base gets proportionally more.
    #[arg(long)]
    points: Option<usize>,
    /// Motion ranges `a:b,...`, one per part (degrees or units).
    #[arg(long, value_parser = parse_pairs, allow_hyphen_values = true)]
    ranges: Option<Pairs>,
    #[arg(long, default_value_t = Encoding::Binary)]
    encoding: Encoding,
    /// Ground-truth path; defaults to the output with extension `gt.json`.
    #[arg(long)]
    gt: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Result file from `analyze`.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth file from `synth`.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value_t = 64)]
    voxel_res: usize,
    #[arg(long, default_value_t = 10_000)]
    chamfer_samples: usize,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long)]
    scene: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    noise: f64,
    #[arg(long, allow_negative_numbers = true)]
    outliers: Option<f64>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, value_parser = parse_pairs, allow_hyphen_values = true)]
    ranges: Option<Pairs>,
}

/// `a:b,c:d` pairs.
#[derive(Clone, Debug)]
struct Pairs(Vec<(f64, f64)>);

/// `t0,t1,...`.
#[derive(Clone, Debug)]
struct Times(Vec<f64>);

fn parse_number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("'{s}' is not a number"))?;
    if !v.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(v)
}

fn parse_pairs(s: &str) -> Result<Pairs, String> {
    s.split(',')
        .map(|pair| {
            let (a, b) = pair
                .split_once(':')
                .ok_or_else(|| format!("'{pair}' is not of the form a:b"))?;
            Ok((parse_number(a)?, parse_number(b)?))
        })
        .collect::<Result<_, String>>()
        .map(Pairs)
}

fn parse_times(s: &str) -> Result<Times, String> {
    s.split(',')
        .map(parse_number)
        .collect::<Result<_, String>>()
        .map(Times)
}

/// Failure classes, mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Internal(String),
}

impl From<articulate::Error> for Failure {
    fn from(e: articulate::Error) -> Self {
        use articulate::Error as E;
        match e {
            E::InvalidInput(_) | E::Format { .. } | E::Io { .. } | E::UnknownScene { .. } => {
                Failure::Usage(e.to_string())
            }
            E::RankDeficient(_) | E::DegenerateMotion(_) => Failure::Internal(e.to_string()),
        }
    }
}

/// `AIM_THREADS`: unset or 0 lets rayon choose.
fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("AIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("AIM_THREADS: '{raw}' is not a thread count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Internal(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors and 0 for --help/--version.
    let cli = Cli::parse();
    let run = configure_threads().and_then(|()| commands::run(&cli));
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn pair_syntax() {
        let p = parse_pairs("0:0.5, 0:1").unwrap();
        assert_eq!(p.0, vec![(0.0, 0.5), (0.0, 1.0)]);
        assert_eq!(parse_pairs("0:-75").unwrap().0, vec![(0.0, -75.0)]);
        for bad in ["0", "0:x", "0:1,", "0:inf"] {
            assert!(parse_pairs(bad).is_err(), "{bad}");
        }
        assert_eq!(parse_times("0,0.5,1").unwrap().0, vec![0.0, 0.5, 1.0]);
        assert!(parse_times("0,,1").is_err());
    }

    #[test]
    fn error_classes() {
        let usage = articulate::Error::InvalidInput("x".into());
        assert!(matches!(Failure::from(usage), Failure::Usage(_)));
        let numeric = articulate::Error::RankDeficient("x".into());
        assert!(matches!(Failure::from(numeric), Failure::Internal(_)));
    }
}

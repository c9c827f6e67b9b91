use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "evfuse",
    version,
    about = "Event/frame fusion and rotation estimation toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic rotating-camera dataset (frames, events, ground truth).
    Simulate(SimulateArgs),
    /// Render event representations (or equalized frames) at every frame timestamp.
    Represent(RepresentArgs),
    /// Fuse event slices into intensity frames.
    Fuse(FuseArgs),
    /// Estimate a rotation trajectory from one source.
    Estimate(EstimateArgs),
    /// Score an estimated trajectory against ground truth.
    Evaluate(EvaluateArgs),
    /// Run several sources end to end and tabulate NC and APE.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Scene config (TOML or JSON); flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sequence length in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Constant body angular velocity "wx,wy,wz" in rad/s. Without it a
    /// seeded piecewise-constant script is used.
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<String>,
    /// Peak rate of the random piecewise script, rad/s.
    #[arg(long, default_value_t = 0.8)]
    pub max_omega: f64,
    /// Segment length of the random piecewise script, seconds.
    #[arg(long, default_value_t = 1.0)]
    pub segment: f64,
    /// Log-intensity contrast threshold.
    #[arg(long)]
    pub contrast: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub fps: Option<f64>,
    /// Pixel value for unit radiance (60 gives a dark sequence).
    #[arg(long)]
    pub frame_max: Option<f64>,
    /// Background noise events per pixel per second.
    #[arg(long)]
    pub noise_rate: Option<f64>,
    /// Translation jitter amplitude in metres.
    #[arg(long)]
    pub jitter: Option<f64>,
    /// Darkened longitude band "lon_min,lon_max,factor" (radians).
    #[arg(long, allow_hyphen_values = true)]
    pub dim_sector: Option<String>,
    /// Internal event sampling rate in Hz.
    #[arg(long)]
    pub sample_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RepresentKind {
    Slice,
    Ts,
    Sits,
    /// Histogram-equalized intensity frames.
    Eq,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Dataset directory (events.txt, images.txt, images/, groundtruth.txt).
    #[arg(long)]
    pub dataset: PathBuf,
    /// Only use the first this-many seconds.
    #[arg(long)]
    pub max_duration: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RepresentArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long, value_enum)]
    pub kind: RepresentKind,
    /// Output directory for PNGs and their images.txt index.
    #[arg(long)]
    pub out: PathBuf,
    /// Events per slice.
    #[arg(long = "n")]
    pub n_events: Option<usize>,
    /// Time-surface decay constant in seconds.
    #[arg(long)]
    pub tau: Option<f64>,
    /// SITS neighbourhood radius.
    #[arg(long)]
    pub radius: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FusionOverrides {
    #[arg(long)]
    pub beta: Option<u8>,
    #[arg(long)]
    pub gamma: Option<u8>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Gaussian kernel size (odd).
    #[arg(long)]
    pub kernel_size: Option<usize>,
    /// Events per fused slice.
    #[arg(long = "n")]
    pub n_events: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Dataset directory holding images.txt and images/.
    #[arg(long)]
    pub frames: PathBuf,
    /// Events file; defaults to events.txt in the frames directory.
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub max_duration: Option<f64>,
    /// Experiment config (TOML or JSON); only its fusion section is used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub fusion: FusionOverrides,
}

/// Flags that override the experiment config file.
#[derive(Debug, Args)]
pub struct ExperimentOverrides {
    /// Experiment config (TOML or JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threshold1: Option<usize>,
    #[arg(long)]
    pub threshold2: Option<usize>,
    #[arg(long)]
    pub ransac_iters: Option<usize>,
    /// Symmetric epipolar distance threshold in normalized units.
    #[arg(long)]
    pub ransac_threshold: Option<f64>,
    #[arg(long)]
    pub max_corners: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub radius: Option<usize>,
    /// Events per slice for the `slice` source.
    #[arg(long)]
    pub slice_events: Option<usize>,
    /// Largest ground-truth bracket used for interpolation, seconds.
    #[arg(long)]
    pub max_dt: Option<f64>,
    #[command(flatten)]
    pub fusion: FusionOverrides,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long)]
    pub source: String,
    /// Intrinsics JSON (fx, fy, cx, cy); defaults to intrinsics.json in the dataset.
    #[arg(long)]
    pub intrinsics: Option<PathBuf>,
    /// Trajectory CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Write one correspondence CSV per frame pair into this directory.
    #[arg(long)]
    pub dump_tracks: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ExperimentOverrides,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Estimated trajectory CSV.
    #[arg(long)]
    pub est: PathBuf,
    /// Ground-truth file.
    #[arg(long)]
    pub gt: PathBuf,
    /// Directory for metrics.json, euler.csv and euler.svg; defaults to the
    /// directory of --est.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = evfuse::evaluation::DEFAULT_MAX_DT)]
    pub max_dt: f64,
    /// Exit with code 4 when the average APE (radians) exceeds this.
    #[arg(long)]
    pub fail_above: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Dataset directory; optional with --from-manifest.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub max_duration: Option<f64>,
    /// Comma-separated subset of original,enhanced,slice,ts,sits,eas.
    #[arg(long, default_value = "original,enhanced,slice,ts,sits,eas")]
    pub sources: String,
    #[arg(long)]
    pub intrinsics: Option<PathBuf>,
    /// Output directory for the table, manifest and trajectories.
    #[arg(long)]
    pub out: PathBuf,
    /// Re-run exactly what a previous manifest.json describes.
    #[arg(long, conflicts_with_all = ["dataset", "config"])]
    pub from_manifest: Option<PathBuf>,
    /// Exit with code 4 when any source's average APE exceeds this.
    #[arg(long)]
    pub fail_above: Option<f64>,
    #[command(flatten)]
    pub overrides: ExperimentOverrides,
}

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cloudnoise::diffusion::{Schedule, DEFAULT_BETA_END, DEFAULT_BETA_START, DEFAULT_COSINE_OFFSET, DEFAULT_STEPS};
use cloudnoise::noise::{CloudParams, NoiseSpec, DEFAULT_OVERSAMPLE};
use cloudnoise::stats::DEFAULT_CROSS_HALFWIDTH;
use serde::{Deserialize, Serialize};

use crate::output::Failure;

/// Scale-invariant image statistics and cloud noise.
#[derive(Parser, Debug)]
#[command(name = "cloudnoise", version)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, env = "CLOUDNOISE_OUT")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Fit the power-law spectrum of an image set.
    Analyze(AnalyzeArgs),
    /// Fit a power law to a radial profile CSV.
    Fit(FitArgs),
    /// Write white or scale-invariant noise samples.
    GenNoise(GenNoiseArgs),
    /// Render a forward noising trajectory with white and cloud noise.
    Noising(NoisingArgs),
    /// Mahalanobis distances between white noise, cloud noise and a dataset.
    Distance(DistanceArgs),
    /// Drop letterboxed images from a PNG directory.
    Clean(CleanArgs),
    /// Re-run the command recorded in a manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct MaskArgs {
    /// Half-width of the masked central cross.
    #[arg(long, default_value_t = DEFAULT_CROSS_HALFWIDTH)]
    pub cross_halfwidth: usize,

    /// Mask only the zero mode.
    #[arg(long)]
    pub no_cross_mask: bool,
}

impl MaskArgs {
    pub fn halfwidth(&self) -> Option<usize> {
        (!self.no_cross_mask).then_some(self.cross_halfwidth)
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    /// PNG directory, CLD1 file or directory, or STL10 binary.
    pub dataset: PathBuf,

    /// Use at most this many images.
    #[arg(long)]
    pub limit: Option<usize>,

    /// Drop letterboxed images before analysis.
    #[arg(long)]
    pub clean: bool,

    #[arg(long, default_value_t = cloudnoise::dataset::DEFAULT_BAND)]
    pub band: usize,

    #[arg(long, default_value_t = cloudnoise::dataset::DEFAULT_UNIFORMITY_TOL)]
    pub tol: f64,

    #[command(flatten)]
    #[serde(flatten)]
    pub mask: MaskArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct FitArgs {
    /// CSV with columns log_k, log_gamma, masked.
    pub profile: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct NoiseArgs {
    /// Scaling exponent.
    #[arg(long, default_value_t = 1.5)]
    pub delta: f64,

    /// Side of the generated field relative to the output.
    #[arg(long, default_value_t = DEFAULT_OVERSAMPLE)]
    pub oversample: usize,

    #[arg(long, default_value_t = 1.0)]
    pub target_std: f64,
}

impl NoiseArgs {
    pub fn params(&self) -> CloudParams {
        CloudParams {
            delta: self.delta,
            oversample: self.oversample,
            target_std: self.target_std,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// Cropped power-law noise with aperiodic edges.
    Cloud,
    /// Power-law noise on the torus.
    Periodic,
    /// I.i.d. standard normal pixels.
    White,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GenNoiseArgs {
    /// Output side length.
    #[arg(long = "n", default_value_t = 96)]
    pub side: usize,

    #[arg(long, value_enum, default_value_t = NoiseKind::Cloud)]
    pub kind: NoiseKind,

    #[command(flatten)]
    #[serde(flatten)]
    pub noise: NoiseArgs,

    #[arg(long, default_value_t = 16)]
    pub count: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl GenNoiseArgs {
    pub fn spec(&self) -> NoiseSpec {
        NoiseSpec {
            delta: self.noise.delta,
            side: self.side,
            oversample: self.noise.oversample,
            target_std: self.noise.target_std,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKindArg {
    LinearBeta,
    Cosine,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleArgs {
    #[arg(long, value_enum, default_value_t = ScheduleKindArg::LinearBeta)]
    pub schedule: ScheduleKindArg,

    #[arg(long, default_value_t = DEFAULT_STEPS)]
    pub steps: usize,

    #[arg(long, default_value_t = DEFAULT_BETA_START)]
    pub beta_start: f64,

    #[arg(long, default_value_t = DEFAULT_BETA_END)]
    pub beta_end: f64,

    #[arg(long, default_value_t = DEFAULT_COSINE_OFFSET)]
    pub cosine_offset: f64,
}

impl ScheduleArgs {
    pub fn build(&self) -> cloudnoise::Result<Schedule> {
        match self.schedule {
            ScheduleKindArg::LinearBeta => Schedule::linear_beta(self.steps, self.beta_start, self.beta_end),
            ScheduleKindArg::Cosine => Schedule::cosine(self.steps, self.cosine_offset),
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct NoisingArgs {
    /// Clean image (PNG, or the first grid of a CLD1 file).
    pub image: PathBuf,

    /// Timesteps to render; 0 is the clean image.
    #[arg(long, value_delimiter = ',', default_value = "0,100,250,500,750,1000")]
    pub snapshots: Vec<usize>,

    /// Standardize the image to zero mean and unit std first.
    #[arg(long)]
    pub standardize: bool,

    #[command(flatten)]
    #[serde(flatten)]
    pub schedule: ScheduleArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub noise: NoiseArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub mask: MaskArgs,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DistanceArgs {
    pub dataset: PathBuf,

    /// Reference exponent (default: fitted from the dataset).
    #[arg(long)]
    pub delta: Option<f64>,

    /// Noise samples drawn per noise type.
    #[arg(long, default_value_t = 256)]
    pub samples: usize,

    #[arg(long, default_value_t = cloudnoise::distance::DEFAULT_PAIRS)]
    pub pairs: usize,

    #[arg(long)]
    pub limit: Option<usize>,

    #[arg(long, default_value_t = DEFAULT_OVERSAMPLE)]
    pub oversample: usize,

    #[command(flatten)]
    #[serde(flatten)]
    pub mask: MaskArgs,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CleanArgs {
    /// Directory of PNG images.
    pub input: PathBuf,

    /// Width of the edge band inspected for bars.
    #[arg(long, default_value_t = cloudnoise::dataset::DEFAULT_BAND)]
    pub band: usize,

    /// Maximum std of a line inside a bar.
    #[arg(long, default_value_t = cloudnoise::dataset::DEFAULT_UNIFORMITY_TOL)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct ReplayArgs {
    /// A manifest.json written by an earlier run.
    pub manifest: PathBuf,

    /// Write outputs here instead of the recorded directory.
    #[arg(long)]
    pub into: Option<PathBuf>,
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub out: PathBuf,
    pub threads: Option<usize>,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    /// Files written by the run, relative to the output directory.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(config: &RunConfig, outputs: Vec<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            outputs,
        }
    }

    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| cloudnoise::Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Failure::input("manifest", format!("{}: {e}", path.display())))
    }
}

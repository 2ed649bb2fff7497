//! `triags` command-line front end: scene and config files, command
//! dispatch, artifact writers and run manifests.

pub mod commands;
pub mod config;
pub mod fixture;
pub mod output;
pub mod schema;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use commands::{run, run_manifest, Manifest};
pub use config::{LossName, Overrides, RunConfig};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_GRADCHECK: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{} exists; pass --force to overwrite", .0.display())]
    Exists(PathBuf),
    #[error("optimization diverged at iteration {0}")]
    Diverged(usize),
    #[error("gradient check failed: max relative error {0:e}")]
    GradCheck(f64),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => EXIT_INPUT,
            Self::Io { .. } | Self::Exists(_) => EXIT_IO,
            Self::Diverged(_) => EXIT_DIVERGED,
            Self::GradCheck(_) => EXIT_GRADCHECK,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "triags", version, about = "Multi-view consensus geometry on Gaussian-splat scenes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_name = "PATH")]
    pub scene: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub loss: Option<LossName>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Image side of the synthetic scene; TSDF grid size for `fuse`.
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Depth, normal and opacity maps of every scene camera.
    Render,
    /// Consensus points of rendered depth pixels.
    Triangulate,
    /// Consistency optimisation of a noisy synthetic scene.
    Optimize,
    /// Neighbour-count ablation.
    AblateK,
    /// Geman–McClure against L2 on the same scene.
    AblateLoss,
    /// Finite-difference check of the consistency gradient.
    Gradcheck,
    /// TSDF fusion and mesh extraction.
    Fuse,
    /// Accuracy of rendered depth against the scene's ground truth.
    Eval,
    /// Re-run a command from its manifest.
    Replay {
        manifest: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Render => "render",
            Self::Triangulate => "triangulate",
            Self::Optimize => "optimize",
            Self::AblateK => "ablate-k",
            Self::AblateLoss => "ablate-loss",
            Self::Gradcheck => "gradcheck",
            Self::Fuse => "fuse",
            Self::Eval => "eval",
            Self::Replay { .. } => "replay",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "render" => Self::Render,
            "triangulate" => Self::Triangulate,
            "optimize" => Self::Optimize,
            "ablate-k" => Self::AblateK,
            "ablate-loss" => Self::AblateLoss,
            "gradcheck" => Self::Gradcheck,
            "fuse" => Self::Fuse,
            "eval" => Self::Eval,
            _ => return None,
        })
    }
}

/// Parse-free entry used by `main` and the tests. Returns the manifest path.
pub fn execute(cli: &Cli) -> Result<PathBuf, CliError> {
    if let Command::Replay { manifest } = &cli.command {
        return run_manifest(manifest, &cli.out, cli.force);
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let overrides = Overrides { seed: cli.seed, k: cli.k, loss: cli.loss, steps: cli.steps, resolution: cli.resolution };
    cfg.apply(&overrides, cli.command.name());
    let scene = match &cli.scene {
        Some(p) => Some(commands::SceneInput::load(p)?),
        None => None,
    };
    run(&cli.command, &cfg, scene.as_ref(), &cli.out, cli.force)
}

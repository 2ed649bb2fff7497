//! Run configuration: one strict JSON document shared by all commands.

use std::path::Path;

use serde::{Deserialize, Serialize};

use triags_core::{DepthMode, ExperimentConfig, GradCheckSpec, LossKind, SceneKind, SceneSpec};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LossName {
    #[serde(alias = "geman_mcclure")]
    Gm,
    L2,
}

impl From<LossName> for LossKind {
    fn from(l: LossName) -> Self {
        match l {
            LossName::Gm => LossKind::GemanMcClure,
            LossName::L2 => LossKind::L2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKindName {
    Sphere,
    Plane,
    TwoSpheres,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthModeName {
    Intersection,
    Blended,
}

/// Synthetic scene for `optimize`, the ablations and `gradcheck`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub kind: SceneKindName,
    pub n_views: usize,
    pub resolution: usize,
    /// Depth noise standard deviation (scene units).
    pub noise: f64,
    pub outlier_fraction: f64,
    pub outlier_magnitude: f64,
    pub bias_step: f64,
    pub camera_distance: f64,
    pub azimuth_span_deg: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        let s = SceneSpec::default();
        Self {
            kind: SceneKindName::Sphere,
            n_views: s.n_views,
            resolution: s.resolution,
            noise: s.noise,
            outlier_fraction: s.outlier_fraction,
            outlier_magnitude: s.outlier_magnitude,
            bias_step: s.bias_step,
            camera_distance: s.camera_distance,
            azimuth_span_deg: s.azimuth_span_deg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub k: usize,
    pub loss: LossName,
    pub steps: usize,
    pub step_size: f64,
    pub warmup_fraction: f64,
    pub lambda_t: f64,
    pub anchor_weight: f64,
    pub momentum: f64,
    pub differentiate_consensus: bool,
    pub sigma0_fraction: f64,
    pub sigma_end_fraction: f64,
    pub synthetic: SyntheticConfig,
    pub ablation_ks: Vec<usize>,
    pub depth_mode: DepthModeName,
    /// TSDF voxels along the longest side of the scene box.
    pub grid_resolution: usize,
    pub gradcheck_points: usize,
    pub gradcheck_step: f64,
    /// F1 threshold as a fraction of the reference bounding-box diagonal.
    pub tau_fraction: f64,
    /// Pixel stride when triangulating rendered depth maps.
    pub triangulate_stride: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        Self {
            seed: 0,
            k: e.k,
            loss: LossName::Gm,
            steps: e.steps,
            step_size: e.step_size,
            warmup_fraction: e.warmup_fraction,
            lambda_t: e.lambda_t,
            anchor_weight: e.anchor_weight,
            momentum: e.momentum,
            differentiate_consensus: e.differentiate_consensus,
            sigma0_fraction: e.sigma0_fraction,
            sigma_end_fraction: e.sigma_end_fraction,
            synthetic: SyntheticConfig::default(),
            ablation_ks: vec![1, 4, 8, 12],
            depth_mode: DepthModeName::Intersection,
            grid_resolution: 128,
            gradcheck_points: 24,
            gradcheck_step: 1e-6,
            tau_fraction: 0.02,
            triangulate_stride: 4,
        }
    }
}

/// Flag values that override the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub loss: Option<LossName>,
    pub steps: Option<usize>,
    pub resolution: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    /// `--resolution` sets the TSDF grid for `fuse` and the synthetic image
    /// size everywhere else.
    pub fn apply(&mut self, o: &Overrides, command: &str) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(k) = o.k {
            self.k = k;
        }
        if let Some(l) = o.loss {
            self.loss = l;
        }
        if let Some(s) = o.steps {
            self.steps = s;
        }
        if let Some(r) = o.resolution {
            if command == "fuse" {
                self.grid_resolution = r;
            } else {
                self.synthetic.resolution = r;
            }
        }
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let e = ExperimentConfig {
            k: self.k,
            loss: self.loss.into(),
            steps: self.steps,
            step_size: self.step_size,
            warmup_fraction: self.warmup_fraction,
            lambda_t: self.lambda_t,
            seed: self.seed,
            differentiate_consensus: self.differentiate_consensus,
            momentum: self.momentum,
            anchor_weight: self.anchor_weight,
            sigma0_fraction: self.sigma0_fraction,
            sigma_end_fraction: self.sigma_end_fraction,
            ..ExperimentConfig::default()
        };
        e.validate().map_err(|err| CliError::Input(err.to_string()))?;
        Ok(e)
    }

    pub fn scene_spec(&self) -> SceneSpec {
        let s = &self.synthetic;
        SceneSpec {
            kind: match s.kind {
                SceneKindName::Sphere => SceneKind::Sphere,
                SceneKindName::Plane => SceneKind::Plane,
                SceneKindName::TwoSpheres => SceneKind::TwoSpheres,
            },
            n_views: s.n_views,
            resolution: s.resolution,
            noise: s.noise,
            outlier_fraction: s.outlier_fraction,
            outlier_magnitude: s.outlier_magnitude,
            bias_step: s.bias_step,
            camera_distance: s.camera_distance,
            azimuth_span_deg: s.azimuth_span_deg,
        }
    }

    pub fn gradcheck_spec(&self) -> GradCheckSpec {
        GradCheckSpec {
            points: self.gradcheck_points,
            k: self.k,
            sigma_fraction: self.sigma0_fraction,
            step: self.gradcheck_step,
            seed: self.seed,
            loss: self.loss.into(),
            ..GradCheckSpec::default()
        }
    }

    pub fn depth_mode(&self) -> DepthMode {
        match self.depth_mode {
            DepthModeName::Intersection => DepthMode::Intersection,
            DepthModeName::Blended => DepthMode::Blended,
        }
    }
}

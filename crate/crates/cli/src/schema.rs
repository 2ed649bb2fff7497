//! Scene file: cameras, Gaussians and an optional ground-truth surface.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use triags_core::optimizer::AnalyticSurface;
use triags_core::{CameraIntrinsics, CameraPose, CameraView, GaussianPrimitive};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub cameras: Vec<CameraSpec>,
    #[serde(default)]
    pub gaussians: Vec<GaussianSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruthSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicsSpec {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub intrinsics: IntrinsicsSpec,
    /// World-to-camera `[R | t]`, row-major.
    pub pose: [f64; 12],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub center: [f64; 3],
    /// `[w, x, y, z]`; normalised when the scene is loaded.
    pub rotation: [f64; 4],
    pub scales: [f64; 3],
    pub opacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum GroundTruthSpec {
    Sphere { center: [f64; 3], radius: f64 },
    Plane { point: [f64; 3], normal: [f64; 3] },
    /// Whitespace-separated `x y z` lines, relative to the scene file.
    Points(PathBuf),
}

/// A validated scene.
#[derive(Debug, Clone)]
pub struct Scene {
    pub file: SceneFile,
    pub views: Vec<CameraView>,
    pub gaussians: Vec<GaussianPrimitive>,
    pub ground_truth: Option<GroundTruth>,
}

#[derive(Debug, Clone)]
pub enum GroundTruth {
    Surface(AnalyticSurface),
    Points(Vec<Vector3<f64>>),
}

fn invalid(field: String, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{field}: {msg}"))
}

pub fn load_scene(path: &Path) -> Result<Scene, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: SceneFile =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    validate(file, path.parent())
}

pub fn save_scene(file: &SceneFile, path: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(file).expect("scene serialises");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

/// Check every field and build core types. Relative point-file paths are
/// resolved against `base`.
pub fn validate(file: SceneFile, base: Option<&Path>) -> Result<Scene, CliError> {
    if file.cameras.is_empty() {
        return Err(invalid("cameras".into(), "at least one camera is required"));
    }
    let dims = (file.cameras[0].intrinsics.width, file.cameras[0].intrinsics.height);
    let mut views = Vec::with_capacity(file.cameras.len());
    for (i, c) in file.cameras.iter().enumerate() {
        let k = c.intrinsics;
        if (k.width, k.height) != dims {
            return Err(invalid(format!("cameras[{i}].intrinsics"), "all cameras must share image dimensions"));
        }
        let intr = CameraIntrinsics::new(k.fx, k.fy, k.cx, k.cy, k.width, k.height)
            .map_err(|e| invalid(format!("cameras[{i}].intrinsics"), e))?;
        let pose = CameraPose::from_row_major(&c.pose).map_err(|e| invalid(format!("cameras[{i}].pose"), e))?;
        views.push(CameraView::new(i, intr, pose));
    }

    let mut gaussians = Vec::with_capacity(file.gaussians.len());
    for (i, g) in file.gaussians.iter().enumerate() {
        if g.scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(invalid(format!("gaussians[{i}].scales"), "scales must be positive, or the covariance is not positive definite"));
        }
        let n = g.rotation.iter().map(|q| q * q).sum::<f64>().sqrt();
        if !(n.is_finite() && n > 1e-12) {
            return Err(invalid(format!("gaussians[{i}].rotation"), "quaternion must be non-zero"));
        }
        // the file keeps the raw values so a manifest reloads to the same bits
        let prim = GaussianPrimitive::new(Vector3::from(g.center), g.rotation.map(|q| q / n), g.scales, g.opacity)
            .map_err(|e| invalid(format!("gaussians[{i}]"), e))?;
        gaussians.push(prim);
    }

    let ground_truth = match &file.ground_truth {
        None => None,
        Some(GroundTruthSpec::Sphere { center, radius }) => {
            if !(*radius > 0.0) {
                return Err(invalid("ground_truth.sphere.radius".into(), "radius must be positive"));
            }
            Some(GroundTruth::Surface(AnalyticSurface::Sphere { center: Vector3::from(*center), radius: *radius }))
        }
        Some(GroundTruthSpec::Plane { point, normal }) => {
            let n = Vector3::from(*normal);
            if !(n.norm() > 1e-12) {
                return Err(invalid("ground_truth.plane.normal".into(), "normal must be non-zero"));
            }
            Some(GroundTruth::Surface(AnalyticSurface::Plane { point: Vector3::from(*point), normal: n.normalize() }))
        }
        Some(GroundTruthSpec::Points(p)) => {
            let full = base.map(|b| b.join(p)).unwrap_or_else(|| p.clone());
            Some(GroundTruth::Points(read_points(&full)?))
        }
    };
    Ok(Scene { file, views, gaussians, ground_truth })
}

fn read_points(path: &Path) -> Result<Vec<Vector3<f64>>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Input(format!("{}:{}: {e}", path.display(), line_no + 1)))?;
        if v.len() != 3 {
            return Err(CliError::Input(format!("{}:{}: expected 3 coordinates", path.display(), line_no + 1)));
        }
        out.push(Vector3::new(v[0], v[1], v[2]));
    }
    if out.is_empty() {
        return Err(CliError::Input(format!("{}: no points", path.display())));
    }
    Ok(out)
}

impl SceneFile {
    /// Scene file describing already-built views, Gaussians and a surface.
    pub fn from_parts(views: &[CameraView], gaussians: &[GaussianSpec], ground_truth: Option<GroundTruthSpec>) -> Self {
        let cameras = views
            .iter()
            .map(|v| {
                let k = v.intrinsics();
                CameraSpec {
                    intrinsics: IntrinsicsSpec { fx: k.fx, fy: k.fy, cx: k.cx, cy: k.cy, width: k.width, height: k.height },
                    pose: v.pose().to_row_major(),
                }
            })
            .collect();
        Self { cameras, gaussians: gaussians.to_vec(), ground_truth }
    }
}

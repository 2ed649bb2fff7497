//! Depth and normal rasterization of 3D Gaussians.
//!
//! Two depth modes are provided. `Blended` composites the camera-space depth of
//! each Gaussian centre, which ignores shape and orientation. `Intersection`
//! composites the per-pixel depth of the ray/Gaussian maximum-density point,
//! evaluated in ray space where every viewing ray is parallel and the
//! intersection distance is a dot product with a per-Gaussian vector `q̂`.

use nalgebra::{Matrix2, Matrix3, Quaternion, UnitQuaternion, Vector2, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use crate::camera::{CameraError, CameraView, Ray, DEPTH_EPS};
use crate::depth::DepthImage;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussianError {
    #[error("scales must be finite and positive, got {0:?}")]
    BadScales([f64; 3]),
    #[error("opacity must lie in (0, 1], got {0}")]
    BadOpacity(f64),
    #[error("rotation quaternion must be unit-norm, |q| = {0}")]
    BadRotation(f64),
    #[error("centre must be finite")]
    BadCenter,
    #[error(transparent)]
    Camera(#[from] CameraError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrimitive {
    pub center: Vector3<f64>,
    rotation: UnitQuaternion<f64>,
    scales: Vector3<f64>,
    pub opacity: f64,
}

impl GaussianPrimitive {
    /// `rotation` is `[w, x, y, z]` and must already be unit-norm.
    pub fn new(
        center: Vector3<f64>,
        rotation: [f64; 4],
        scales: [f64; 3],
        opacity: f64,
    ) -> Result<Self, GaussianError> {
        let q = Quaternion::new(rotation[0], rotation[1], rotation[2], rotation[3]);
        let n = q.norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-10 {
            return Err(GaussianError::BadRotation(n));
        }
        Self::build(center, UnitQuaternion::new_normalize(q), scales, opacity)
    }

    pub fn with_rotation(
        center: Vector3<f64>,
        rotation: UnitQuaternion<f64>,
        scales: [f64; 3],
        opacity: f64,
    ) -> Result<Self, GaussianError> {
        Self::build(center, rotation, scales, opacity)
    }

    fn build(
        center: Vector3<f64>,
        rotation: UnitQuaternion<f64>,
        scales: [f64; 3],
        opacity: f64,
    ) -> Result<Self, GaussianError> {
        if center.iter().any(|v| !v.is_finite()) {
            return Err(GaussianError::BadCenter);
        }
        if scales.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(GaussianError::BadScales(scales));
        }
        if !(opacity > 0.0 && opacity <= 1.0) {
            return Err(GaussianError::BadOpacity(opacity));
        }
        Ok(Self { center, rotation, scales: Vector3::from(scales), opacity })
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    pub fn scales(&self) -> [f64; 3] {
        [self.scales.x, self.scales.y, self.scales.z]
    }

    /// `Σ = R S Sᵀ Rᵀ`.
    pub fn covariance(&self) -> Matrix3<f64> {
        let r = self.rotation.to_rotation_matrix().into_inner();
        let s2 = Matrix3::from_diagonal(&self.scales.component_mul(&self.scales));
        r * s2 * r.transpose()
    }

    pub fn inverse_covariance(&self) -> Matrix3<f64> {
        let r = self.rotation.to_rotation_matrix().into_inner();
        let inv = Matrix3::from_diagonal(&self.scales.map(|s| 1.0 / (s * s)));
        r * inv * r.transpose()
    }
}

/// Distance along `ray` of the maximum of the Gaussian density:
/// `t* = vᵀΣ⁻¹(x_c − o) / (vᵀΣ⁻¹v)`.
pub fn ray_gaussian_intersection_exact(ray: &Ray, g: &GaussianPrimitive) -> f64 {
    let si = g.inverse_covariance();
    let siv = si * ray.direction;
    siv.dot(&(g.center - ray.origin)) / siv.dot(&ray.direction)
}

/// A Gaussian expressed in the ray space of one view.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySpaceGaussian {
    /// `Σ' = J W Σ Wᵀ Jᵀ`.
    pub covariance: Matrix3<f64>,
    /// Centre `(u, v, ‖μ_cam‖)`: its pixel and its distance from the camera.
    pub center: Vector3<f64>,
    pub q_hat: Vector3<f64>,
    /// Jacobian of `(x, y, z) ↦ (fx x/z + cx, fy y/z + cy, ‖x‖)` at the centre.
    pub jacobian: Matrix3<f64>,
    /// Normal of the ray-space intersection plane.
    pub normal: Vector3<f64>,
    pub cos_theta_c: f64,
    /// Camera-space z of the centre, used for depth sorting.
    pub view_depth: f64,
    pub opacity: f64,
    /// Inverse of the 2-D screen-space footprint covariance.
    pub conic: Matrix2<f64>,
    /// Footprint radius in pixels (3σ of the major axis).
    pub radius: f64,
}

pub fn to_ray_space(view: &CameraView, g: &GaussianPrimitive) -> Result<RaySpaceGaussian, GaussianError> {
    let pose = view.pose();
    let k = view.intrinsics();
    let mu = pose.to_camera(&g.center);
    if !(mu.z > DEPTH_EPS) {
        return Err(CameraError::BehindCamera(mu.z).into());
    }
    let dist = mu.norm();
    let (x, y, z) = (mu.x, mu.y, mu.z);
    let jacobian = Matrix3::new(
        k.fx / z, 0.0, -k.fx * x / (z * z),
        0.0, k.fy / z, -k.fy * y / (z * z),
        x / dist, y / dist, z / dist,
    );
    let w = pose.rotation();
    let cov_cam = w * g.covariance() * w.transpose();
    let covariance = jacobian * cov_cam * jacobian.transpose();
    let covariance = (covariance + covariance.transpose()) * 0.5;
    // Σ'⁻¹ = J⁻ᵀ (W Σ⁻¹ Wᵀ) J⁻¹ avoids inverting the (possibly very thin) Σ' directly.
    let j_inv = jacobian.try_inverse().ok_or(CameraError::BehindCamera(z))?;
    let inv_cov = j_inv.transpose() * (w * g.inverse_covariance() * w.transpose()) * j_inv;
    let col = inv_cov.column(2);
    let mut q_hat = col / col[2];
    q_hat[2] = 1.0;
    let normal = q_hat.normalize();
    let center = Vector3::new(k.fx * x / z + k.cx, k.fy * y / z + k.cy, dist);

    let cov2 = covariance.fixed_view::<2, 2>(0, 0).into_owned();
    let conic = cov2.try_inverse().unwrap_or_else(Matrix2::zeros);
    let mid = 0.5 * (cov2[(0, 0)] + cov2[(1, 1)]);
    let det = cov2.determinant();
    let lambda_max = mid + (mid * mid - det).max(0.0).sqrt();
    Ok(RaySpaceGaussian {
        covariance,
        center,
        q_hat,
        jacobian,
        normal,
        cos_theta_c: z / dist,
        view_depth: z,
        opacity: g.opacity,
        conic,
        radius: 3.0 * lambda_max.sqrt(),
    })
}

/// `t* = q̂ · (u_c − u_o)` with `u_o = (pixel, 0)`; depth `d = t*·cos θ_c`.
pub fn ray_space_intersection(rsg: &RaySpaceGaussian, pixel: &Vector2<f64>) -> (f64, f64) {
    let offset = Vector3::new(rsg.center.x - pixel.x, rsg.center.y - pixel.y, rsg.center.z);
    let t = rsg.q_hat.dot(&offset);
    (t, t * rsg.cos_theta_c)
}

impl RaySpaceGaussian {
    /// Camera-frame unit normal `Jᵀn'`, oriented against the viewing ray
    /// direction `dir_cam`.
    pub fn camera_normal(&self, dir_cam: &Vector3<f64>) -> Vector3<f64> {
        let n = (self.jacobian.transpose() * self.normal).normalize();
        if n.dot(dir_cam) > 0.0 {
            -n
        } else {
            n
        }
    }

    /// Screen-space falloff `exp(−½ Δᵀ C Δ)` at `pixel`.
    pub fn footprint(&self, pixel: &Vector2<f64>) -> f64 {
        let d = pixel - self.center.xy();
        (-0.5 * d.dot(&(self.conic * d))).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthMode {
    /// Composite the per-pixel ray/Gaussian intersection depth.
    Intersection,
    /// Composite Gaussian centre depths.
    Blended,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub mode: DepthMode,
    /// Stop compositing once transmittance falls below this.
    pub termination: f64,
    /// Per-splat contributions below this opacity are skipped.
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Pixels with lower accumulated opacity are invalid.
    pub validity: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            mode: DepthMode::Intersection,
            termination: 1e-4,
            alpha_min: 1.0 / 255.0,
            alpha_max: 0.99,
            validity: 0.5,
        }
    }
}

impl RenderOptions {
    pub fn with_mode(mode: DepthMode) -> Self {
        Self { mode, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthNormalMap {
    pub depth: DepthImage,
    /// Camera-frame unit normals; zero at invalid pixels.
    pub normals: Vec<Vector3<f64>>,
    /// `Σ Tᵢ α'ᵢ` per pixel.
    pub opacity: Vec<f64>,
    /// Transmittance left after compositing.
    pub transmittance: Vec<f64>,
}

impl DepthNormalMap {
    pub fn width(&self) -> usize {
        self.depth.width
    }

    pub fn height(&self) -> usize {
        self.depth.height
    }

    pub fn normal(&self, x: usize, y: usize) -> Option<Vector3<f64>> {
        self.depth
            .is_valid(x, y)
            .then(|| self.normals[self.depth.index(x, y)])
    }
}

struct PixelResult {
    depth: f64,
    normal: Vector3<f64>,
    opacity: f64,
    transmittance: f64,
}

const TILE: usize = 16;

pub fn render_depth_normal(
    view: &CameraView,
    gaussians: &[GaussianPrimitive],
    mode: DepthMode,
) -> DepthNormalMap {
    render_depth_normal_with(view, gaussians, &RenderOptions::with_mode(mode))
}

pub fn render_depth_normal_with(
    view: &CameraView,
    gaussians: &[GaussianPrimitive],
    opts: &RenderOptions,
) -> DepthNormalMap {
    let k = *view.intrinsics();
    let (w, h) = (k.width, k.height);

    let mut splats: Vec<(usize, RaySpaceGaussian)> = gaussians
        .iter()
        .enumerate()
        .filter_map(|(i, g)| to_ray_space(view, g).ok().map(|r| (i, r)))
        .collect();
    splats.sort_by(|a, b| a.1.view_depth.total_cmp(&b.1.view_depth).then(a.0.cmp(&b.0)));

    let tiles_x = w.div_ceil(TILE);
    let tiles_y = h.div_ceil(TILE);
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); tiles_x * tiles_y];
    for (si, (_, s)) in splats.iter().enumerate() {
        let (cx, cy, r) = (s.center.x, s.center.y, s.radius);
        if !(r.is_finite() && cx.is_finite() && cy.is_finite()) {
            continue;
        }
        let x0 = ((cx - r).floor().max(0.0) as usize) / TILE;
        let y0 = ((cy - r).floor().max(0.0) as usize) / TILE;
        if cx + r < 0.0 || cy + r < 0.0 {
            continue;
        }
        let x1 = (((cx + r).ceil() as usize) / TILE).min(tiles_x.saturating_sub(1));
        let y1 = (((cy + r).ceil() as usize) / TILE).min(tiles_y.saturating_sub(1));
        if x0 >= tiles_x || y0 >= tiles_y {
            continue;
        }
        for ty in y0..=y1 {
            for tx in x0..=x1 {
                bins[ty * tiles_x + tx].push(si);
            }
        }
    }

    let rows: Vec<Vec<PixelResult>> = (0..h)
        .into_par_iter()
        .map(|py| {
            (0..w)
                .map(|px| {
                    let bin = &bins[(py / TILE) * tiles_x + px / TILE];
                    shade_pixel(&k, px, py, bin, &splats, opts)
                })
                .collect()
        })
        .collect();

    let mut depth = DepthImage::invalid(w, h);
    let mut normals = vec![Vector3::zeros(); w * h];
    let mut opacity = vec![0.0; w * h];
    let mut transmittance = vec![1.0; w * h];
    for (py, row) in rows.into_iter().enumerate() {
        for (px, r) in row.into_iter().enumerate() {
            let i = depth.index(px, py);
            opacity[i] = r.opacity;
            transmittance[i] = r.transmittance;
            if r.opacity >= opts.validity && r.depth > 0.0 {
                depth.set(px, py, r.depth);
                normals[i] = r.normal;
            }
        }
    }
    DepthNormalMap { depth, normals, opacity, transmittance }
}

fn shade_pixel(
    k: &crate::camera::CameraIntrinsics,
    px: usize,
    py: usize,
    bin: &[usize],
    splats: &[(usize, RaySpaceGaussian)],
    opts: &RenderOptions,
) -> PixelResult {
    let pixel = Vector2::new(px as f64, py as f64);
    let dir_cam = k.unproject(&pixel);
    let mut t_acc = 1.0;
    let mut weight = 0.0;
    let mut depth = 0.0;
    let mut normal = Vector3::zeros();
    for &si in bin {
        let s = &splats[si].1;
        let alpha = (s.opacity * s.footprint(&pixel)).min(opts.alpha_max);
        if alpha < opts.alpha_min {
            continue;
        }
        let wgt = t_acc * alpha;
        let d = match opts.mode {
            DepthMode::Blended => s.view_depth,
            DepthMode::Intersection => ray_space_intersection(s, &pixel).1,
        };
        depth += wgt * d;
        normal += wgt * s.camera_normal(&dir_cam);
        weight += wgt;
        t_acc *= 1.0 - alpha;
        if t_acc < opts.termination {
            break;
        }
    }
    if weight > 0.0 {
        depth /= weight;
    }
    let normal = if normal.norm() > 0.0 { normal.normalize() } else { normal };
    PixelResult { depth, normal, opacity: weight, transmittance: t_acc }
}

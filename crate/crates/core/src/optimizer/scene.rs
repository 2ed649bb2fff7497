//! Analytic surfaces and synthetic multi-view scenes.

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::camera::{CameraIntrinsics, CameraPose, CameraView};
use crate::depth::DepthImage;
use crate::triangulation::{DepthField, SurfacePoint};

use super::OptimizerError;

/// Hits whose normal makes a cosine below this with the ray count as misses;
/// grazing pixels carry unbounded depth gradients.
pub const MIN_HIT_COSINE: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticSurface {
    Sphere { center: Vector3<f64>, radius: f64 },
    Plane { point: Vector3<f64>, normal: Vector3<f64> },
    Union(Vec<AnalyticSurface>),
}

impl AnalyticSurface {
    pub fn unit_sphere() -> Self {
        AnalyticSurface::Sphere { center: Vector3::zeros(), radius: 1.0 }
    }

    /// First hit along `origin + t·dir`, `t > 0`, with the outward unit normal.
    pub fn ray_hit(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, Vector3<f64>)> {
        match self {
            AnalyticSurface::Sphere { center, radius } => {
                let oc = origin - center;
                let a = dir.norm_squared();
                let b = oc.dot(dir);
                let c = oc.norm_squared() - radius * radius;
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                let t = [(-b - sq) / a, (-b + sq) / a].into_iter().find(|t| *t > 0.0)?;
                Some((t, (origin + dir * t - center) / *radius))
            }
            AnalyticSurface::Plane { point, normal } => {
                let n = normal.normalize();
                let den = n.dot(dir);
                if den.abs() < 1e-15 {
                    return None;
                }
                let t = n.dot(&(point - origin)) / den;
                (t > 0.0).then_some((t, n))
            }
            AnalyticSurface::Union(parts) => parts
                .iter()
                .filter_map(|p| p.ray_hit(origin, dir))
                .min_by(|a, b| a.0.total_cmp(&b.0)),
        }
    }

    /// Unsigned distance from `p` to the surface.
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        match self {
            AnalyticSurface::Sphere { center, radius } => ((p - center).norm() - radius).abs(),
            AnalyticSurface::Plane { point, normal } => normal.normalize().dot(&(p - point)).abs(),
            AnalyticSurface::Union(parts) => parts.iter().map(|s| s.distance(p)).fold(f64::INFINITY, f64::min),
        }
    }

    /// Camera z-depth of the surface through `pixel` and its pixel gradient.
    pub fn depth_at(&self, view: &CameraView, pixel: &Vector2<f64>) -> Option<(f64, Vector2<f64>)> {
        let dir = view.depth_direction(pixel);
        let (z, n) = self.ray_hit(&view.center(), &dir)?;
        let cos = n.dot(&dir) / dir.norm();
        if cos.abs() < MIN_HIT_COSINE {
            return None;
        }
        let k = view.intrinsics();
        let rt = view.pose().rotation().transpose();
        let du = rt * Vector3::new(1.0 / k.fx, 0.0, 0.0);
        let dv = rt * Vector3::new(0.0, 1.0 / k.fy, 0.0);
        let nd = n.dot(&dir);
        Some((z, Vector2::new(-z * n.dot(&du) / nd, -z * n.dot(&dv) / nd)))
    }

    pub fn depth_image(&self, view: &CameraView) -> DepthImage {
        let k = view.intrinsics();
        DepthImage::from_fn(k.width, k.height, |x, y| {
            self.depth_at(view, &Vector2::new(x as f64, y as f64)).map(|(d, _)| d)
        })
    }
}

/// Smooth per-view depth error `a·sin(ωu·u + φ)·cos(ωv·v + ψ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ripple {
    pub amplitude: f64,
    pub freq: Vector2<f64>,
    pub phase: Vector2<f64>,
}

impl Ripple {
    fn eval(&self, p: &Vector2<f64>) -> (f64, Vector2<f64>) {
        let (su, cu) = (self.freq.x * p.x + self.phase.x).sin_cos();
        let (sv, cv) = (self.freq.y * p.y + self.phase.y).sin_cos();
        let a = self.amplitude;
        (a * su * cv, Vector2::new(a * self.freq.x * cu * cv, -a * self.freq.y * su * sv))
    }
}

/// An analytic surface seen through per-view smooth depth errors. Depth is
/// infinitely differentiable in the pixel, unlike a sampled image.
#[derive(Debug, Clone)]
pub struct AnalyticDepthField {
    pub surface: AnalyticSurface,
    pub views: Vec<CameraView>,
    pub ripples: Vec<Ripple>,
}

impl AnalyticDepthField {
    pub fn with_random_ripples(surface: AnalyticSurface, views: Vec<CameraView>, amplitude: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ripples = views
            .iter()
            .map(|_| Ripple {
                amplitude: amplitude * rng.gen_range(0.5..1.0),
                freq: Vector2::new(rng.gen_range(0.05..0.3), rng.gen_range(0.05..0.3)),
                phase: Vector2::new(rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3)),
            })
            .collect();
        Self { surface, views, ripples }
    }
}

impl DepthField for AnalyticDepthField {
    fn sample(&self, view_id: usize, pixel: &Vector2<f64>) -> Option<(f64, Vector2<f64>)> {
        let i = self.views.iter().position(|v| v.id == view_id)?;
        if !self.views[i].intrinsics().contains(pixel) {
            return None;
        }
        let (d, g) = self.surface.depth_at(&self.views[i], pixel)?;
        let (rd, rg) = self.ripples[i].eval(pixel);
        Some((d + rd, g + rg))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    Sphere,
    Plane,
    TwoSpheres,
}

impl SceneKind {
    pub fn surface(self) -> AnalyticSurface {
        match self {
            SceneKind::Sphere => AnalyticSurface::unit_sphere(),
            SceneKind::Plane => AnalyticSurface::Plane { point: Vector3::zeros(), normal: Vector3::z() },
            SceneKind::TwoSpheres => AnalyticSurface::Union(vec![
                AnalyticSurface::Sphere { center: Vector3::new(0.0, -0.55, 0.0), radius: 0.5 },
                AnalyticSurface::Sphere { center: Vector3::new(-0.2, 0.5, 0.1), radius: 0.45 },
            ]),
        }
    }

    fn elevations_deg(self) -> (f64, f64) {
        match self {
            SceneKind::Plane => (50.0, 70.0),
            _ => (15.0, 35.0),
        }
    }

    /// Radius of a sphere around the origin that the image should frame.
    pub fn framing_radius(self) -> f64 {
        match self {
            SceneKind::Plane => 1.5,
            _ => 1.05,
        }
    }
}

/// Synthetic scene description. Lengths are in scene units (the unit sphere
/// has radius 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub kind: SceneKind,
    pub n_views: usize,
    /// Square image side in pixels.
    pub resolution: usize,
    /// Standard deviation of per-pixel Gaussian depth noise.
    pub noise: f64,
    /// Fraction of pixels given a gross depth error.
    pub outlier_fraction: f64,
    /// Gross errors have magnitude uniform in `[0.5, 1]` times this, random sign.
    pub outlier_magnitude: f64,
    /// Depth bias of view column `c` is `(c − (columns−1)/2) · bias_step`.
    pub bias_step: f64,
    pub camera_distance: f64,
    /// Azimuth half-span of the camera band, degrees.
    pub azimuth_span_deg: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            kind: SceneKind::Sphere,
            n_views: 20,
            resolution: 32,
            noise: 0.05,
            outlier_fraction: 0.0,
            outlier_magnitude: 0.5,
            bias_step: 0.0,
            camera_distance: 4.0,
            azimuth_span_deg: 30.0,
        }
    }
}

/// Cameras on two rows of a band facing the origin. Views are numbered row
/// by row; within a row, by increasing azimuth.
pub fn band_cameras(spec: &SceneSpec) -> Result<Vec<CameraView>, OptimizerError> {
    if spec.n_views < 2 {
        return Err(OptimizerError::InvalidInput(format!("need at least 2 views, got {}", spec.n_views)));
    }
    if spec.resolution < 4 {
        return Err(OptimizerError::InvalidInput(format!("resolution {} too small", spec.resolution)));
    }
    let cols = spec.n_views.div_ceil(2);
    let (el_lo, el_hi) = spec.kind.elevations_deg();
    let half_fov = (spec.kind.framing_radius() / spec.camera_distance).asin();
    let focal = 0.9 * (spec.resolution as f64 * 0.5) / half_fov.tan();
    let k = CameraIntrinsics::centered(focal, spec.resolution)?;
    let mut views = Vec::with_capacity(spec.n_views);
    for i in 0..spec.n_views {
        let (row, col) = (i / cols, i % cols);
        let el = if row == 0 { el_lo } else { el_hi }.to_radians();
        let az = if cols == 1 {
            0.0
        } else {
            (-spec.azimuth_span_deg + 2.0 * spec.azimuth_span_deg * col as f64 / (cols - 1) as f64).to_radians()
        };
        let eye = Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()) * spec.camera_distance;
        views.push(CameraView::new(i, k, CameraPose::look_at(&eye, &Vector3::zeros(), &Vector3::z())?));
    }
    Ok(views)
}

/// `n` cameras on a Fibonacci sphere of radius `distance`, all looking at
/// the origin, framing a ball of radius `framing_radius` at 90 % of the image.
pub fn orbit_cameras(
    n: usize,
    distance: f64,
    resolution: usize,
    framing_radius: f64,
) -> Result<Vec<CameraView>, OptimizerError> {
    if n == 0 || !(distance > framing_radius && framing_radius > 0.0) {
        return Err(OptimizerError::InvalidInput("orbit needs views outside the framed ball".into()));
    }
    let half_fov = (framing_radius / distance).asin();
    let focal = 0.9 * (resolution as f64 * 0.5) / half_fov.tan();
    let k = CameraIntrinsics::centered(focal, resolution)?;
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            let eye = Vector3::new(r * phi.cos(), r * phi.sin(), z) * distance;
            let up = if r < 0.1 { Vector3::y() } else { Vector3::z() };
            Ok(CameraView::new(i, k, CameraPose::look_at(&eye, &Vector3::zeros(), &up)?))
        })
        .collect()
}

/// Depth maps under optimisation: per-pixel offsets on top of fixed initial
/// depths, along fixed per-pixel rays.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizableSurface {
    pub views: Vec<CameraView>,
    pub initial: Vec<DepthImage>,
    pub offsets: Vec<Vec<f64>>,
}

impl OptimizableSurface {
    pub fn new(views: Vec<CameraView>, initial: Vec<DepthImage>) -> Self {
        let offsets = initial.iter().map(|d| vec![0.0; d.width * d.height]).collect();
        Self { views, initial, offsets }
    }

    pub fn depth(&self, view: usize, x: usize, y: usize) -> Option<f64> {
        let img = &self.initial[view];
        img.get(x, y).map(|d| d + self.offsets[view][img.index(x, y)])
    }

    pub fn depth_images(&self) -> Vec<DepthImage> {
        self.initial
            .iter()
            .zip(&self.offsets)
            .map(|(img, off)| {
                let mut out = DepthImage::invalid(img.width, img.height);
                for (x, y, d) in img.valid_pixels() {
                    out.set(x, y, d + off[img.index(x, y)]);
                }
                out
            })
            .collect()
    }

    /// Current surface points of every valid pixel, view by view.
    pub fn points(&self) -> Vec<SurfacePoint> {
        let mut out = Vec::new();
        for (vi, img) in self.initial.iter().enumerate() {
            let view = &self.views[vi];
            for (x, y, d) in img.valid_pixels() {
                let pixel = Vector2::new(x as f64, y as f64);
                let depth = d + self.offsets[vi][img.index(x, y)];
                let position = view.center() + view.depth_direction(&pixel) * depth;
                out.push(SurfacePoint { position, view_id: view.id, pixel, depth });
            }
        }
        out
    }

    pub fn point_count(&self) -> usize {
        self.initial.iter().map(|d| d.valid_count()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub surface: AnalyticSurface,
    /// True depth of every pixel that is valid in the optimisable surface.
    pub depths: Vec<DepthImage>,
    /// Diagonal of the bounding box of the true visible points.
    pub diagonal: f64,
}

impl GroundTruth {
    pub fn points(&self, views: &[CameraView]) -> Vec<Vector3<f64>> {
        let mut out = Vec::new();
        for (view, img) in views.iter().zip(&self.depths) {
            for (x, y, d) in img.valid_pixels() {
                out.push(view.center() + view.depth_direction(&Vector2::new(x as f64, y as f64)) * d);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub spec: SceneSpec,
    pub surface: OptimizableSurface,
    pub truth: GroundTruth,
}

pub fn bounding_diagonal(points: &[Vector3<f64>]) -> f64 {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    if points.is_empty() {
        0.0
    } else {
        (hi - lo).norm()
    }
}

/// Renders true depths analytically, then corrupts them with per-view bias,
/// Gaussian noise and gross outliers, in that order, from one seeded stream.
pub fn make_synthetic_scene(spec: &SceneSpec, seed: u64) -> Result<SyntheticScene, OptimizerError> {
    if !(spec.noise >= 0.0 && spec.outlier_fraction >= 0.0 && spec.outlier_fraction <= 1.0) {
        return Err(OptimizerError::InvalidInput("noise and outlier fraction must be non-negative".into()));
    }
    let views = band_cameras(spec)?;
    let surface = spec.kind.surface();
    let cols = spec.n_views.div_ceil(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, spec.noise.max(f64::MIN_POSITIVE)).expect("finite std");

    let mut truth_depths = Vec::with_capacity(views.len());
    let mut initial = Vec::with_capacity(views.len());
    for view in &views {
        let truth = surface.depth_image(view);
        let col = view.id % cols;
        let bias = (col as f64 - (cols as f64 - 1.0) / 2.0) * spec.bias_step;
        let mut noisy = DepthImage::invalid(truth.width, truth.height);
        let mut kept = DepthImage::invalid(truth.width, truth.height);
        for (x, y, d) in truth.valid_pixels() {
            let mut e = bias;
            if spec.noise > 0.0 {
                e += normal.sample(&mut rng);
            }
            if spec.outlier_fraction > 0.0 && rng.gen_bool(spec.outlier_fraction) {
                let mag = spec.outlier_magnitude * rng.gen_range(0.5..1.0);
                e += if rng.gen_bool(0.5) { mag } else { -mag };
            }
            // keep depths physical; a pixel whose corrupted depth is not
            // positive is dropped from both images
            if d + e > 0.05 * d {
                noisy.set(x, y, d + e);
                kept.set(x, y, d);
            }
        }
        truth_depths.push(kept);
        initial.push(noisy);
    }
    let gt_points: Vec<Vector3<f64>> = views
        .iter()
        .zip(&truth_depths)
        .flat_map(|(v, img)| {
            img.valid_pixels()
                .map(|(x, y, d)| v.center() + v.depth_direction(&Vector2::new(x as f64, y as f64)) * d)
                .collect::<Vec<_>>()
        })
        .collect();
    let diagonal = bounding_diagonal(&gt_points);
    Ok(SyntheticScene {
        spec: *spec,
        surface: OptimizableSurface::new(views, initial),
        truth: GroundTruth { surface, depths: truth_depths, diagonal },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_depth_gradient_matches_differences() {
        let spec = SceneSpec::default();
        let views = band_cameras(&spec).unwrap();
        let s = AnalyticSurface::unit_sphere();
        let p = Vector2::new(13.3, 17.8);
        let (_, g) = s.depth_at(&views[3], &p).unwrap();
        let h = 1e-5;
        let du = (s.depth_at(&views[3], &(p + Vector2::x() * h)).unwrap().0
            - s.depth_at(&views[3], &(p - Vector2::x() * h)).unwrap().0)
            / (2.0 * h);
        let dv = (s.depth_at(&views[3], &(p + Vector2::y() * h)).unwrap().0
            - s.depth_at(&views[3], &(p - Vector2::y() * h)).unwrap().0)
            / (2.0 * h);
        assert!((g - Vector2::new(du, dv)).norm() < 1e-7 * g.norm().max(1.0));
    }

    #[test]
    fn band_views_are_mutually_eligible() {
        let views = band_cameras(&SceneSpec::default()).unwrap();
        let policy = crate::camera::NeighborPolicy::default();
        for v in &views {
            assert_eq!(policy.eligible(v, &views).len(), views.len() - 1);
        }
    }

    #[test]
    fn plane_hit_and_distance() {
        let s = SceneKind::Plane.surface();
        let (t, n) = s.ray_hit(&Vector3::new(0.0, 0.0, 2.0), &Vector3::new(0.0, 0.0, -1.0)).unwrap();
        assert_eq!(t, 2.0);
        assert_eq!(n, Vector3::z());
        assert_eq!(s.distance(&Vector3::new(3.0, 1.0, -0.5)), 0.5);
    }
}

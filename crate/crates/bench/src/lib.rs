//! Workloads shared by the benchmarks and their sanity tests.

use nalgebra::{UnitQuaternion, Vector2, Vector3};

use triags_core::optimizer::{band_cameras, AnalyticDepthField};
use triags_core::{
    assemble_dlt_with, CameraView, DepthImage, DltSystem, GaussianPrimitive, NeighborPolicy, PointViews, SceneKind,
    SceneSpec,
};

/// Band cameras around the unit sphere with per-view smooth depth errors.
pub struct SphereRig {
    pub views: Vec<CameraView>,
    pub field: AnalyticDepthField,
    pub depths: Vec<DepthImage>,
}

impl SphereRig {
    pub fn new(n_views: usize, resolution: usize) -> Self {
        let spec = SceneSpec { kind: SceneKind::Sphere, n_views, resolution, ..SceneSpec::default() };
        let views = band_cameras(&spec).expect("band cameras");
        let surface = spec.kind.surface();
        let depths = views.iter().map(|v| surface.depth_image(v)).collect();
        let field = AnalyticDepthField::with_random_ripples(surface, views.clone(), 0.02, 0);
        Self { views, field, depths }
    }

    /// Reference view plus `k` neighbours for every view.
    pub fn view_sets(&self, k: usize) -> Vec<Vec<&CameraView>> {
        let policy = NeighborPolicy::default();
        self.views
            .iter()
            .map(|v| {
                let mut set = vec![v];
                set.extend(policy.select(v, &self.views, k).expect("enough views").into_iter().map(|i| &self.views[i]));
                set
            })
            .collect()
    }

    /// Surface points seen by each view on a pixel grid with the given
    /// stride, paired with that view's set.
    pub fn points<'a>(&self, sets: &'a [Vec<&'a CameraView>], stride: usize) -> (Vec<Vector3<f64>>, Vec<PointViews<'a>>) {
        let mut points = Vec::new();
        let mut pvs = Vec::new();
        for (v, img) in self.views.iter().zip(&self.depths) {
            for (x, y, d) in img.valid_pixels() {
                if x % stride == 0 && y % stride == 0 {
                    let p = Vector2::new(x as f64, y as f64);
                    points.push(v.center() + v.depth_direction(&p) * d);
                    let set = &sets[v.id];
                    pvs.push(PointViews { reference: set[0], views: set.clone() });
                }
            }
        }
        (points, pvs)
    }

    /// DLT systems with derivatives for the given points.
    pub fn systems(&self, points: &[Vector3<f64>], pvs: &[PointViews<'_>]) -> Vec<DltSystem> {
        let source = triags_core::DepthTransfer::new(&self.field);
        points
            .iter()
            .zip(pvs)
            .filter_map(|(x, pv)| assemble_dlt_with(x, pv.reference, &pv.views, &source, true).ok())
            .collect()
    }
}

/// `n` flat splats tangent to the unit sphere, sized to their spacing.
pub fn sphere_splats(n: usize) -> Vec<GaussianPrimitive> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let spacing = (4.0 * std::f64::consts::PI / n as f64).sqrt();
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            let c = Vector3::new(r * phi.cos(), r * phi.sin(), z);
            let q = UnitQuaternion::rotation_between(&Vector3::z(), &c).unwrap_or_else(UnitQuaternion::identity);
            GaussianPrimitive::with_rotation(c, q, [spacing, spacing, 1e-3], 1.0).expect("valid splat")
        })
        .collect()
}

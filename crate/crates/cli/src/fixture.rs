//! Reference scene: the unit sphere tiled by flat tangent splats, seen by the
//! synthetic band cameras. `fixtures/sphere_scene.json` is this scene.

use nalgebra::{UnitQuaternion, Vector3};

use triags_core::{SceneKind, SceneSpec};

use crate::schema::{GaussianSpec, GroundTruthSpec, SceneFile};

pub const FIXTURE_VIEWS: usize = 12;
pub const FIXTURE_RESOLUTION: usize = 48;
pub const FIXTURE_SPLATS: usize = 1500;

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// `n` points on a sphere of radius `radius`, evenly spread.
pub fn fibonacci_sphere(n: usize, radius: f64) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z) * radius
        })
        .collect()
}

/// Tangent splats whose in-plane scale matches their spacing. Values are
/// rounded to six decimals, so quaternions rely on load-time normalisation.
pub fn sphere_splats(n: usize) -> Vec<GaussianSpec> {
    let spacing = (4.0 * std::f64::consts::PI / n as f64).sqrt();
    fibonacci_sphere(n, 1.0)
        .into_iter()
        .map(|c| {
            let q = UnitQuaternion::rotation_between(&Vector3::z(), &c).unwrap_or_else(UnitQuaternion::identity);
            GaussianSpec {
                center: [c.x, c.y, c.z].map(round6),
                rotation: [q.w, q.i, q.j, q.k].map(round6),
                scales: [round6(spacing), round6(spacing), 1e-3],
                opacity: 1.0,
            }
        })
        .collect()
}

pub fn sphere_scene() -> SceneFile {
    let spec = SceneSpec { kind: SceneKind::Sphere, n_views: FIXTURE_VIEWS, resolution: FIXTURE_RESOLUTION, ..SceneSpec::default() };
    let views = triags_core::optimizer::band_cameras(&spec).expect("fixture cameras");
    SceneFile::from_parts(
        &views,
        &sphere_splats(FIXTURE_SPLATS),
        Some(GroundTruthSpec::Sphere { center: [0.0; 3], radius: 1.0 }),
    )
}

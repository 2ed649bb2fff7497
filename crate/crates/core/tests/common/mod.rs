#![allow(dead_code)]

use nalgebra::{Rotation3, Vector3};
use rand::Rng;
use triags_core::{CameraIntrinsics, CameraPose, CameraView};

/// `n` cameras 3–6 units from `target`, spread over a 50° cone and aimed at
/// it with a little jitter, so `target` projects inside every image.
pub fn views_around<R: Rng>(rng: &mut R, target: &Vector3<f64>, n: usize) -> Vec<CameraView> {
    let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap();
    let cone = Rotation3::from_euler_angles(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(0.0..6.0));
    (0..n)
        .map(|i| {
            let theta = rng.gen_range(0.0..50f64.to_radians());
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            let dir = cone * Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), -theta.cos());
            let eye = target + dir * rng.gen_range(3.0..6.0);
            let aim = target + Vector3::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
            let up = Vector3::new(rng.gen_range(-0.3..0.3), 1.0, rng.gen_range(-0.3..0.3));
            CameraView::new(i, k, CameraPose::look_at(&eye, &aim, &up).unwrap())
        })
        .collect()
}

pub fn random_point<R: Rng>(rng: &mut R) -> Vector3<f64> {
    Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

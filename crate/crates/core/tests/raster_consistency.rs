use nalgebra::{UnitQuaternion, Vector2, Vector3};
use triags_core::gaussian::ray_space_intersection;
use triags_core::{
    ray_gaussian_intersection_exact, render_depth_normal, to_ray_space, CameraIntrinsics, CameraPose, CameraView,
    DepthMode, GaussianPrimitive,
};

const DISK_DEPTH: f64 = 60.0;

fn disk_scene() -> (CameraView, GaussianPrimitive, Vector3<f64>) {
    let view = CameraView::new(0, CameraIntrinsics::centered(500.0, 64).unwrap(), CameraPose::identity());
    let tilt = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), 45f64.to_radians());
    let centre = Vector3::new(0.0, 0.0, DISK_DEPTH);
    let disk = GaussianPrimitive::with_rotation(centre, tilt, [1.0, 1.0, 1e-3], 1.0).unwrap();
    (view, disk, tilt * Vector3::z())
}

/// Largest `|d − d_plane| / d_plane` over valid pixels, with `d_plane` the
/// depth of the disk's mid-plane along each pixel ray.
fn plane_deviation(mode: DepthMode) -> (f64, usize) {
    let (view, disk, normal) = disk_scene();
    let map = render_depth_normal(&view, &[disk.clone()], mode);
    let mut worst = 0.0f64;
    for (x, y, d) in map.depth.valid_pixels() {
        let dir = view.intrinsics().unproject(&Vector2::new(x as f64, y as f64));
        let plane = normal.dot(&disk.center) / normal.dot(&dir);
        worst = worst.max((d - plane).abs() / plane);
    }
    (worst, map.depth.valid_count())
}

#[test]
fn intersection_depths_lie_on_the_disk_plane() {
    let (inter, n) = plane_deviation(DepthMode::Intersection);
    let (blend, _) = plane_deviation(DepthMode::Blended);
    assert!(n > 100, "only {n} valid pixels");
    assert!(inter < 1e-3, "intersection deviation {inter}");
    assert!(blend >= 10.0 * inter, "blended {blend} vs intersection {inter}");
}

#[test]
fn blended_depth_is_flat_at_centre_depth() {
    let (view, disk, _) = disk_scene();
    let map = render_depth_normal(&view, &[disk], DepthMode::Blended);
    for (_, _, d) in map.depth.valid_pixels() {
        assert!((d - DISK_DEPTH).abs() < 1e-9);
    }
}

#[test]
fn ray_space_matches_exact_near_expansion_pixel() {
    let k = CameraIntrinsics::centered(500.0, 512).unwrap();
    let pose = CameraPose::look_at(&Vector3::new(0.4, -0.3, -6.0), &Vector3::new(0.1, 0.2, 0.0), &Vector3::y()).unwrap();
    let view = CameraView::new(0, k, pose);
    let rot = UnitQuaternion::from_euler_angles(0.3, -0.7, 1.1);
    let g = GaussianPrimitive::with_rotation(Vector3::new(0.2, 0.1, 0.3), rot, [0.3, 0.15, 0.02], 1.0).unwrap();
    let rsg = to_ray_space(&view, &g).unwrap();
    let c = rsg.center.xy();
    let exact_depth = |p: &Vector2<f64>| {
        let ray = view.ray_through(p);
        let t = ray_gaussian_intersection_exact(&ray, &g);
        view.pose().to_camera(&ray.at(t)).z
    };
    let (_, d0) = ray_space_intersection(&rsg, &c);
    assert!((d0 - exact_depth(&c)).abs() < 1e-12 * d0);
    for dy in -5..=5 {
        for dx in -5..=5 {
            if dx * dx + dy * dy > 25 {
                continue;
            }
            let p = c + Vector2::new(dx as f64, dy as f64);
            let (_, d) = ray_space_intersection(&rsg, &p);
            let e = exact_depth(&p);
            assert!((d - e).abs() < 1e-3 * e, "({dx}, {dy}): {d} vs {e}");
        }
    }
}

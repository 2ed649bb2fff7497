use nalgebra::Vector3;

use triags_bench::{sphere_splats, SphereRig};
use triags_core::{render_depth_normal, solve_consensus, DepthMode};

#[test]
fn rig_points_lie_on_the_sphere_and_triangulate() {
    let rig = SphereRig::new(20, 32);
    let sets = rig.view_sets(4);
    assert!(sets.iter().all(|s| s.len() == 5));
    let (points, pvs) = rig.points(&sets, 4);
    assert_eq!(points.len(), pvs.len());
    assert!(points.len() > 100);
    assert!(points.iter().all(|p| (p.norm() - 1.0).abs() < 1e-9));
    let systems = rig.systems(&points, &pvs);
    // most points are seen by their neighbours; the consensus stays near the surface
    assert!(systems.len() * 10 > points.len() * 8, "{} of {}", systems.len(), points.len());
    let off: Vec<f64> = systems.iter().filter_map(|s| solve_consensus(s).ok()).map(|c| (c.position.norm() - 1.0).abs()).collect();
    let median = {
        let mut o = off.clone();
        o.sort_by(f64::total_cmp);
        o[o.len() / 2]
    };
    assert!(median < 0.05, "median offset {median}");
}

#[test]
fn splats_cover_the_sphere() {
    let rig = SphereRig::new(12, 64);
    let map = render_depth_normal(&rig.views[0], &sphere_splats(2000), DepthMode::Intersection);
    let analytic = &rig.depths[0];
    assert!(map.depth.valid_count() * 10 > analytic.valid_count() * 9);
    let centre = Vector3::zeros();
    let dist = (rig.views[0].center() - centre).norm();
    let near = map.depth.valid_pixels().map(|(_, _, d)| d).fold(f64::INFINITY, f64::min);
    assert!((near - (dist - 1.0)).abs() < 0.05, "nearest depth {near}, camera at {dist}");
}

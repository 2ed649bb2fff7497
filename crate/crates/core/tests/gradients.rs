use triags_core::{gradcheck, GradCheckSpec, LossKind, SceneKind, SceneSpec};

fn check(kind: SceneKind, spec: GradCheckSpec) {
    let scene = SceneSpec { kind, ..Default::default() };
    let report = gradcheck(&scene, &spec).unwrap();
    assert_eq!(report.entries.len(), 3 * spec.points);
    assert!(report.max_relative_error < 1e-5, "{kind:?}: {}", report.max_relative_error);
    assert!(report.entries.iter().filter(|e| e.analytic.abs() > 1e-3).count() > spec.points);
}

#[test]
fn robust_gradient_matches_central_differences() {
    check(SceneKind::Sphere, GradCheckSpec { points: 24, ..Default::default() });
    check(SceneKind::TwoSpheres, GradCheckSpec { points: 20, seed: 4, ..Default::default() });
}

#[test]
fn quadratic_gradient_matches_central_differences() {
    check(SceneKind::Plane, GradCheckSpec { points: 20, loss: LossKind::L2, seed: 2, ..Default::default() });
}

#[test]
fn gradient_holds_deep_in_the_saturated_regime() {
    // residuals of several σ, where the robust weight is small
    check(SceneKind::Sphere, GradCheckSpec { points: 20, sigma_fraction: 0.005, seed: 9, ..Default::default() });
}

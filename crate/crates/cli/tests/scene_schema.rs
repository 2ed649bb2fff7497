mod common;

use triags_cli::fixture::{sphere_scene, FIXTURE_SPLATS, FIXTURE_VIEWS};
use triags_cli::schema::{load_scene, save_scene, validate, SceneFile};
use triags_cli::CliError;

const MINIMAL: &str = r#"{
  "cameras": [{"intrinsics": {"fx": 100, "fy": 100, "cx": 15.5, "cy": 15.5, "width": 32, "height": 32},
               "pose": [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 5]}],
  "gaussians": [{"center": [0, 0, 0], "rotation": [2, 0, 0, 0], "scales": [0.1, 0.1, 0.01], "opacity": 0.8}]
}"#;

fn parse(json: &str) -> Result<SceneFile, serde_json::Error> {
    serde_json::from_str(json)
}

fn input_message(e: CliError) -> String {
    match e {
        CliError::Input(m) => m,
        other => panic!("expected an input error, got {other}"),
    }
}

#[test]
fn minimal_scene_survives_save_and_reload() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.json");
    std::fs::write(&first, MINIMAL).unwrap();
    let a = load_scene(&first).unwrap();
    let second = dir.path().join("b.json");
    save_scene(&a.file, &second).unwrap();
    let b = load_scene(&second).unwrap();
    assert_eq!(a.file, b.file);
    // the file keeps what was written; the primitive gets the unit quaternion
    assert_eq!(a.file.gaussians[0].rotation, [2.0, 0.0, 0.0, 0.0]);
    assert_eq!(a.gaussians[0].rotation().into_inner().coords, nalgebra::Vector4::new(0.0, 0.0, 0.0, 1.0));
}

#[test]
fn zero_scale_names_the_field() {
    let mut file = parse(MINIMAL).unwrap();
    file.gaussians[0].scales[1] = 0.0;
    let msg = input_message(validate(file, None).unwrap_err());
    assert!(msg.starts_with("gaussians[0].scales"), "{msg}");
}

#[test]
fn unknown_fields_are_rejected() {
    let typo = MINIMAL.replace("\"opacity\"", "\"opacty\"");
    let err = parse(&typo).unwrap_err().to_string();
    assert!(err.contains("opacty"), "{err}");
    let extra = MINIMAL.replacen('{', "{\"lights\": [],", 1);
    assert!(parse(&extra).is_err());
}

#[test]
fn mismatched_image_sizes_are_rejected() {
    let mut file = parse(MINIMAL).unwrap();
    let mut other = file.cameras[0];
    other.intrinsics.width = 64;
    file.cameras.push(other);
    let msg = input_message(validate(file, None).unwrap_err());
    assert!(msg.starts_with("cameras[1].intrinsics"), "{msg}");
}

#[test]
fn bad_pose_names_the_camera() {
    let mut file = parse(MINIMAL).unwrap();
    file.cameras[0].pose[0] = 2.0;
    let msg = input_message(validate(file, None).unwrap_err());
    assert!(msg.starts_with("cameras[0].pose"), "{msg}");
}

#[test]
fn reference_fixture_matches_its_generator() {
    let scene = load_scene(&common::fixture()).unwrap();
    assert_eq!(scene.views.len(), FIXTURE_VIEWS);
    assert_eq!(scene.gaussians.len(), FIXTURE_SPLATS);
    assert!(scene.ground_truth.is_some());
    let raw = parse(&std::fs::read_to_string(common::fixture()).unwrap()).unwrap();
    assert_eq!(raw, sphere_scene());
}

#[test]
fn point_ground_truth_resolves_next_to_the_scene() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("gt.xyz"), "# x y z\n0 0 1\n0 1 0\n").unwrap();
    let json = MINIMAL.replacen('{', "{\"ground_truth\": {\"points\": \"gt.xyz\"},", 1);
    let path = dir.path().join("scene.json");
    std::fs::write(&path, json).unwrap();
    match load_scene(&path).unwrap().ground_truth {
        Some(triags_cli::schema::GroundTruth::Points(p)) => assert_eq!(p.len(), 2),
        other => panic!("unexpected ground truth {other:?}"),
    }
}

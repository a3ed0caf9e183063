use boxgrasp_core::export::{gripper_marker, ply_string, ExportError, GRIPPER_EDGES};
use boxgrasp_core::geometry::RotationMatrix;
use boxgrasp_core::{
    generate_scene_grasps, load_scene, parse_ascii_ply, save_scene, GraspFile, RunConfig, Scene,
    Vec3,
};

const SCENE: &str = r#"{
  "scene_id": "desk-01",
  "gravity": [0.0, 1.0, 0.0],
  "objects": [
    {
      "id": 1, "label": "small box", "shape_class": "box", "confidence": 0.93,
      "pose": {"rotation": [1, 0, 0, 0, 0, -1, 0, 1, 0], "translation": [0.0, 0.7, 0.5]},
      "extents": [0.05, 0.06, 0.12],
      "points": [[0.01, 0.65, 0.52], [0.02, 0.64, 0.53]]
    },
    {
      "id": 2, "label": "apple", "shape_class": "sphere", "confidence": 0.81,
      "pose": {"rotation": [1, 0, 0, 0, 0, -1, 0, 1, 0], "translation": [0.2, 0.7, 0.5]},
      "extents": [0.07, 0.07, 0.07]
    },
    {
      "id": 3, "label": "can", "shape_class": "cylinder", "confidence": 0.88,
      "pose": {"rotation": [1, 0, 0, 0, 0, -1, 0, 1, 0], "translation": [-0.2, 0.7, 0.5]},
      "extents": [0.066, 0.066, 0.115]
    }
  ]
}"#;

fn scene() -> Scene {
    Scene::from_json(SCENE).unwrap()
}

#[test]
fn scene_json_write_read_write_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    save_scene(&scene(), &first).unwrap();
    let loaded = load_scene(&first).unwrap();
    save_scene(&loaded, &second).unwrap();
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    assert_eq!(loaded, scene());
}

#[test]
fn grasp_json_round_trip_is_bit_identical() {
    let cfg = RunConfig::default();
    let set = generate_scene_grasps(&scene(), &cfg).unwrap();
    let file = GraspFile::from_grasp_set(&set, cfg.seed, &cfg.digest());
    assert!(!file.grasps.is_empty());
    let text = file.to_json();
    let back = GraspFile::from_json(&text).unwrap();
    for (a, b) in file.grasps.iter().zip(&back.grasps) {
        for (x, y) in a.rotation.iter().zip(&b.rotation) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in a.translation.iter().zip(&b.translation) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.score.to_bits(), b.score.to_bits());
        assert_eq!(a.stability.to_bits(), b.stability.to_bits());
    }
    assert_eq!(back, file);
    assert_eq!(back.to_json(), text);
}

#[test]
fn empty_grasp_set_is_a_valid_file() {
    let empty = Scene::new("empty", Vec3::y(), vec![]).unwrap();
    let set = generate_scene_grasps(&empty, &RunConfig::default()).unwrap();
    let file = GraspFile::from_grasp_set(&set, 0, "digest");
    let back = GraspFile::from_json(&file.to_json()).unwrap();
    assert!(back.grasps.is_empty());
    assert_eq!(back.scene_id, "empty");

    let ply = parse_ascii_ply(&ply_string(&scene(), &[]).unwrap()).unwrap();
    assert_eq!(ply[0].rows.len(), 3 * 8);
    assert_eq!(ply[1].rows.len(), 3 * 12);
}

fn measure(ply: &[boxgrasp_core::export::PlyElement], marker: usize, boxes: usize) -> (f64, f64, f64) {
    let vertex = &ply[0];
    let (xi, yi, zi) = (
        vertex.column("x").unwrap(),
        vertex.column("y").unwrap(),
        vertex.column("z").unwrap(),
    );
    let at = |i: usize| {
        let r = &vertex.rows[i];
        Vec3::new(r[xi], r[yi], r[zi])
    };
    let edge = &ply[1];
    let (ai, bi) = (edge.column("vertex1").unwrap(), edge.column("vertex2").unwrap());
    let first_edge = boxes * 12 + marker * GRIPPER_EDGES.len();
    let seg = |k: usize| {
        let r = &edge.rows[first_edge + k];
        (at(r[ai] as usize), at(r[bi] as usize))
    };
    let (l0, l1) = seg(0);
    let (r0, r1) = seg(1);
    ((l1 - l0).norm(), (r1 - r0).norm(), (r0 - l0).norm())
}

#[test]
fn ply_finger_segments_measure_width_and_depth() {
    let s = scene();
    let cfg = RunConfig::default();
    let file = GraspFile::from_grasp_set(&generate_scene_grasps(&s, &cfg).unwrap(), 0, "d");
    let text = ply_string(&s, &file.grasps).unwrap();
    assert!(text.starts_with("ply\nformat ascii 1.0\n"));
    let ply = parse_ascii_ply(&text).unwrap();
    assert_eq!(ply[0].name, "vertex");
    assert_eq!(ply[1].name, "edge");
    assert_eq!(ply[0].rows.len(), 24 + 6 * file.grasps.len());
    for (i, g) in file.grasps.iter().enumerate() {
        let (left, right, separation) = measure(&ply, i, 3);
        assert!((left - g.depth).abs() < 1e-9);
        assert!((right - g.depth).abs() < 1e-9);
        assert!((separation - g.width).abs() < 1e-9);
    }
}

#[test]
fn single_marker_example() {
    // w = 0.06, d = 0.03
    let r = boxgrasp_core::rotation_from_xy(&Vec3::y(), &Vec3::x()).unwrap();
    let v = gripper_marker(&r, &Vec3::new(0.1, 0.2, 0.3), 0.06, 0.03);
    assert!(((v[3] - v[1]).norm() - 0.03).abs() < 1e-12);
    assert!(((v[2] - v[1]).norm() - 0.06).abs() < 1e-12);
    assert_eq!(RotationMatrix::from_row_major(&r.to_row_major()).unwrap(), r);
}

#[test]
fn mismatched_scene_id_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let file = GraspFile {
        scene_id: "other".into(),
        config_digest: "d".into(),
        seed: 0,
        grasps: vec![],
    };
    let err = boxgrasp_core::export_ply(&scene(), &file, &dir.path().join("x.ply")).unwrap_err();
    assert!(matches!(err, ExportError::SceneMismatch { .. }));
}

#[test]
fn ply_reader_rejects_garbage() {
    assert!(parse_ascii_ply("not a ply").is_err());
    assert!(parse_ascii_ply("ply\nformat ascii 1.0\nelement vertex 2\nproperty double x\nend_header\n1\n").is_err());
    assert!(parse_ascii_ply("ply\nformat binary_little_endian 1.0\nend_header\n").is_err());
}

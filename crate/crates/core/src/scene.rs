//! Scene of object detections and its JSON file contract.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{is_finite, Obb, PoseRecord, RigidTransform, Vec3};
use crate::strategies::ShapeClass;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}parse error at line {line}, column {column}, field `{field}`: {message}", fmt_path(.path))]
    Parse {
        path: Option<PathBuf>,
        field: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}invalid field `{field}`: {message}", fmt_path(.path))]
    Invalid {
        path: Option<PathBuf>,
        field: String,
        message: String,
    },
    #[error("{}duplicate object id {id}", fmt_path(.path))]
    DuplicateId { path: Option<PathBuf>, id: u64 },
    #[error("invalid config: {0}")]
    Config(String),
}

fn fmt_path(path: &Option<PathBuf>) -> String {
    path.as_ref()
        .map(|p| format!("{}: ", p.display()))
        .unwrap_or_default()
}

impl SceneError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        SceneError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn from_path_error(e: serde_path_to_error::Error<serde_json::Error>) -> Self {
        let field = e.path().to_string();
        let inner = e.into_inner();
        SceneError::Parse {
            path: None,
            field,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    }

    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        SceneError::Invalid {
            path: None,
            field: field.into(),
            message: message.into(),
        }
    }

    /// Attaches the file path to parse and validation errors.
    pub fn at(self, p: &Path) -> Self {
        let some = Some(p.to_path_buf());
        match self {
            SceneError::Parse {
                field,
                line,
                column,
                message,
                ..
            } => SceneError::Parse {
                path: some,
                field,
                line,
                column,
                message,
            },
            SceneError::Invalid { field, message, .. } => SceneError::Invalid {
                path: some,
                field,
                message,
            },
            SceneError::DuplicateId { id, .. } => SceneError::DuplicateId { path: some, id },
            other => other,
        }
    }
}

/// One detected object.
#[derive(Debug, Clone, PartialEq)]
pub struct ObbDetection {
    pub id: u64,
    pub label: String,
    pub shape_class: ShapeClass,
    pub confidence: f64,
    pub obb: Obb,
    /// Segmented object points in the camera frame; never read by grasp synthesis.
    pub points: Option<Vec<Vec3>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scene_id: String,
    pub gravity: Vec3,
    pub objects: Vec<ObbDetection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub scene_id: String,
    pub gravity: [f64; 3],
    pub objects: Vec<ObjectRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub id: u64,
    pub label: String,
    pub shape_class: ShapeClass,
    pub confidence: f64,
    pub pose: PoseRecord,
    pub extents: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 3]>>,
}

impl Scene {
    pub fn new(scene_id: impl Into<String>, gravity: Vec3, objects: Vec<ObbDetection>) -> Result<Self, SceneError> {
        let scene = Self {
            scene_id: scene_id.into(),
            gravity,
            objects,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if !is_finite(&self.gravity) || (self.gravity.norm() - 1.0).abs() > 1e-9 {
            return Err(SceneError::invalid("gravity", "must be a finite unit vector"));
        }
        let mut seen = HashSet::new();
        for (i, o) in self.objects.iter().enumerate() {
            if !seen.insert(o.id) {
                return Err(SceneError::DuplicateId { path: None, id: o.id });
            }
            if !(0.0..=1.0).contains(&o.confidence) {
                return Err(SceneError::invalid(
                    format!("objects[{i}].confidence"),
                    format!("{} is outside [0, 1]", o.confidence),
                ));
            }
            if let Some(points) = &o.points {
                if let Some(j) = points.iter().position(|p| !is_finite(p)) {
                    return Err(SceneError::invalid(
                        format!("objects[{i}].points[{j}]"),
                        "non-finite coordinate",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn object(&self, id: u64) -> Option<&ObbDetection> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn to_file(&self) -> SceneFile {
        SceneFile {
            scene_id: self.scene_id.clone(),
            gravity: self.gravity.into(),
            objects: self
                .objects
                .iter()
                .map(|o| ObjectRecord {
                    id: o.id,
                    label: o.label.clone(),
                    shape_class: o.shape_class,
                    confidence: o.confidence,
                    pose: PoseRecord::from(o.obb.pose()),
                    extents: (*o.obb.extents()).into(),
                    points: o
                        .points
                        .as_ref()
                        .map(|pts| pts.iter().map(|p| (*p).into()).collect()),
                })
                .collect(),
        }
    }

    pub fn from_file(file: SceneFile) -> Result<Self, SceneError> {
        let gravity = Vec3::from(file.gravity);
        let mut objects = Vec::with_capacity(file.objects.len());
        for (i, rec) in file.objects.into_iter().enumerate() {
            let pose = RigidTransform::try_from(&rec.pose)
                .map_err(|e| SceneError::invalid(format!("objects[{i}].pose"), e.to_string()))?;
            let obb = Obb::new(pose, Vec3::from(rec.extents))
                .map_err(|e| SceneError::invalid(format!("objects[{i}].extents"), e.to_string()))?;
            objects.push(ObbDetection {
                id: rec.id,
                label: rec.label,
                shape_class: rec.shape_class,
                confidence: rec.confidence,
                obb,
                points: rec.points.map(|pts| pts.into_iter().map(Vec3::from).collect()),
            });
        }
        Scene::new(file.scene_id, gravity, objects)
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: SceneFile =
            serde_path_to_error::deserialize(de).map_err(SceneError::from_path_error)?;
        Scene::from_file(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scene serializes")
    }
}

pub fn load_scene(path: &Path) -> Result<Scene, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|e| SceneError::io(path, e))?;
    Scene::from_json(&text).map_err(|e| e.at(path))
}

pub fn save_scene(scene: &Scene, path: &Path) -> Result<(), SceneError> {
    std::fs::write(path, scene.to_json()).map_err(|e| SceneError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "scene_id": "one-box",
        "gravity": [0, 1, 0],
        "objects": [{
            "id": 3, "label": "small box", "shape_class": "box", "confidence": 0.9,
            "pose": {"rotation": [1,0,0, 0,1,0, 0,0,1], "translation": [0, 0.4, 0.6]},
            "extents": [0.06, 0.08, 0.10]
        }]
    }"#;

    #[test]
    fn minimal_scene_parses() {
        let scene = Scene::from_json(MINIMAL).unwrap();
        assert_eq!(scene.objects.len(), 1);
        assert_eq!(scene.objects[0].shape_class, ShapeClass::Box);
        assert!(scene.objects[0].points.is_none());
        let again = Scene::from_json(&scene.to_json()).unwrap();
        assert_eq!(again, scene);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = MINIMAL.replace("}]", "}, {\"id\": 3, \"label\": \"b\", \"shape_class\": \"box\", \"confidence\": 0.5, \"pose\": {\"rotation\": [1,0,0,0,1,0,0,0,1], \"translation\": [0,0,0]}, \"extents\": [1,1,1]}]");
        assert!(matches!(
            Scene::from_json(&text),
            Err(SceneError::DuplicateId { id: 3, .. })
        ));
    }

    #[test]
    fn confidence_out_of_range() {
        let text = MINIMAL.replace("0.9", "1.3");
        let err = Scene::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("objects[0].confidence"), "{err}");
    }

    #[test]
    fn parse_errors_name_field_and_line() {
        let text = MINIMAL.replace("\"box\"", "\"blob\"");
        match Scene::from_json(&text).unwrap_err() {
            SceneError::Parse { field, line, .. } => {
                assert_eq!(field, "objects[0].shape_class");
                assert_eq!(line, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = Scene::from_json(&MINIMAL.replace("[0.06, 0.08, 0.10]", "[0.06, 0, 0.1]")).unwrap_err();
        assert!(err.to_string().contains("objects[0].extents"));
        let err = Scene::from_json(&MINIMAL.replace("[0, 1, 0]", "[0, 2, 0]")).unwrap_err();
        assert!(err.to_string().contains("gravity"));
    }

    #[test]
    fn path_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        std::fs::write(&p, "{").unwrap();
        let err = load_scene(&p).unwrap_err();
        assert!(err.to_string().contains("bad.json"));
        let err = load_scene(&dir.path().join("missing.json")).unwrap_err();
        assert!(matches!(err, SceneError::Io { .. }));
    }
}

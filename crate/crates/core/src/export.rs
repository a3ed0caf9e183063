//! Grasp JSON files and ASCII PLY wireframes for offline inspection.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{obb_corners, RotationMatrix, Vec3};
use crate::pipeline::GraspSet;
use crate::scene::{Scene, SceneError};

/// Length of the approach stem drawn behind each gripper marker (m).
pub const STEM_LENGTH: f64 = 0.05;

/// Box edges as corner index pairs, for the binary-counting corner order.
pub const BOX_EDGES: [(usize, usize); 12] = [
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

const BOX_COLOR: [u8; 3] = [200, 200, 200];
const FINGER_COLOR: [u8; 3] = [220, 40, 40];
const PALM_COLOR: [u8; 3] = [40, 40, 220];
const STEM_COLOR: [u8; 3] = [40, 180, 40];

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] SceneError),
    #[error("scene id mismatch: scene file has `{scene}`, grasp file has `{grasps}`")]
    SceneMismatch { scene: String, grasps: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspRecord {
    pub object_id: u64,
    pub label: String,
    /// Row-major; columns are X (approach), Y (closing), Z.
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
    pub width: f64,
    pub depth: f64,
    pub stability: f64,
    pub confidence: f64,
    pub score: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspFile {
    pub scene_id: String,
    pub config_digest: String,
    pub seed: u64,
    pub grasps: Vec<GraspRecord>,
}

impl GraspFile {
    pub fn from_grasp_set(set: &GraspSet, seed: u64, config_digest: &str) -> Self {
        let grasps = set
            .objects
            .iter()
            .flat_map(|o| {
                o.grasps.iter().map(move |g| GraspRecord {
                    object_id: o.object_id,
                    label: o.label.clone(),
                    rotation: g.candidate.rotation.to_row_major(),
                    translation: g.candidate.translation.into(),
                    width: g.candidate.width,
                    depth: g.candidate.depth,
                    stability: g.stability,
                    confidence: g.confidence,
                    score: g.score,
                    d1: g.d1,
                    d2: g.d2,
                })
            })
            .collect();
        Self {
            scene_id: set.scene_id.clone(),
            config_digest: config_digest.to_string(),
            seed,
            grasps,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grasp file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(SceneError::from_path_error)
    }

    pub fn load(path: &Path) -> Result<Self, ExportError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExportError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_json(&text).map_err(|e| e.at(path))?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ExportError> {
        write_file(path, &self.to_json())
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), ExportError> {
    std::fs::write(path, text).map_err(|source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn export_grasps(set: &GraspSet, seed: u64, config_digest: &str, path: &Path) -> Result<(), ExportError> {
    GraspFile::from_grasp_set(set, seed, config_digest).save(path)
}

/// Vertices of one gripper marker: palm centre, the two finger bases, the two
/// fingertips and the end of the approach stem.
pub fn gripper_marker(rotation: &RotationMatrix, translation: &Vec3, width: f64, depth: f64) -> [Vec3; 6] {
    let x = rotation.x_axis();
    let y = rotation.y_axis();
    let t = *translation;
    let left = t - y * (width / 2.0);
    let right = t + y * (width / 2.0);
    [t, left, right, left + x * depth, right + x * depth, t - x * STEM_LENGTH]
}

/// Marker edges over [`gripper_marker`] vertices: two fingers, two palm halves, stem.
pub const GRIPPER_EDGES: [(usize, usize); 5] = [(1, 3), (2, 4), (1, 0), (0, 2), (0, 5)];

/// Renders box wireframes and gripper markers as ASCII PLY with vertex and edge elements.
pub fn ply_string(scene: &Scene, grasps: &[GraspRecord]) -> Result<String, ExportError> {
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut edges: Vec<(usize, usize, [u8; 3])> = Vec::new();
    for o in &scene.objects {
        let base = vertices.len();
        vertices.extend(obb_corners(&o.obb));
        edges.extend(BOX_EDGES.iter().map(|&(a, b)| (base + a, base + b, BOX_COLOR)));
    }
    for g in grasps {
        let rotation = RotationMatrix::from_row_major(&g.rotation).map_err(|e| {
            SceneError::Config(format!("grasp for object {}: {e}", g.object_id))
        })?;
        let base = vertices.len();
        vertices.extend(gripper_marker(&rotation, &Vec3::from(g.translation), g.width, g.depth));
        for (k, &(a, b)) in GRIPPER_EDGES.iter().enumerate() {
            let color = match k {
                0 | 1 => FINGER_COLOR,
                2 | 3 => PALM_COLOR,
                _ => STEM_COLOR,
            };
            edges.push((base + a, base + b, color));
        }
    }

    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "comment scene_id {}", scene.scene_id);
    let _ = writeln!(out, "element vertex {}", vertices.len());
    out.push_str("property double x\nproperty double y\nproperty double z\n");
    let _ = writeln!(out, "element edge {}", edges.len());
    out.push_str(
        "property int vertex1\nproperty int vertex2\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
    );
    for v in &vertices {
        let _ = writeln!(out, "{} {} {}", v.x, v.y, v.z);
    }
    for (a, b, c) in &edges {
        let _ = writeln!(out, "{a} {b} {} {} {}", c[0], c[1], c[2]);
    }
    Ok(out)
}

pub fn export_ply(scene: &Scene, grasps: &GraspFile, path: &Path) -> Result<(), ExportError> {
    if scene.scene_id != grasps.scene_id {
        return Err(ExportError::SceneMismatch {
            scene: scene.scene_id.clone(),
            grasps: grasps.scene_id.clone(),
        });
    }
    write_file(path, &ply_string(scene, &grasps.grasps)?)
}

/// One element block of a parsed ASCII PLY file.
#[derive(Debug, Clone, PartialEq)]
pub struct PlyElement {
    pub name: String,
    pub properties: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl PlyElement {
    pub fn column(&self, property: &str) -> Option<usize> {
        self.properties.iter().position(|p| p == property)
    }
}

/// Reads ASCII PLY 1.0 with scalar properties (list properties are rejected).
pub fn parse_ascii_ply(text: &str) -> Result<Vec<PlyElement>, String> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err("missing `ply` magic".into());
    }
    let mut elements: Vec<(PlyElement, usize)> = Vec::new();
    let mut saw_format = false;
    loop {
        let line = lines.next().ok_or("unterminated header")?.trim();
        let mut words = line.split_whitespace();
        match words.next() {
            Some("format") => {
                if words.next() != Some("ascii") || words.next() != Some("1.0") {
                    return Err(format!("unsupported format line `{line}`"));
                }
                saw_format = true;
            }
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                let name = words.next().ok_or("element without name")?.to_string();
                let count = words
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| format!("bad element count in `{line}`"))?;
                elements.push((
                    PlyElement {
                        name,
                        properties: Vec::new(),
                        rows: Vec::with_capacity(count),
                    },
                    count,
                ));
            }
            Some("property") => {
                let ty = words.next().ok_or("property without type")?;
                if ty == "list" {
                    return Err("list properties are not supported".into());
                }
                let name = words.next().ok_or("property without name")?;
                let (el, _) = elements.last_mut().ok_or("property before element")?;
                el.properties.push(name.to_string());
            }
            Some("end_header") => break,
            _ => return Err(format!("unexpected header line `{line}`")),
        }
    }
    if !saw_format {
        return Err("missing format line".into());
    }
    for (el, count) in &mut elements {
        for _ in 0..*count {
            let line = lines.next().ok_or_else(|| format!("element `{}` is truncated", el.name))?;
            let row = line
                .split_whitespace()
                .map(|w| w.parse::<f64>().map_err(|e| format!("`{w}`: {e}")))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != el.properties.len() {
                return Err(format!("row `{line}` does not match `{}` properties", el.name));
            }
            el.rows.push(row);
        }
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err("trailing data after last element".into());
    }
    Ok(elements.into_iter().map(|(el, _)| el).collect())
}

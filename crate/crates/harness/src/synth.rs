//! Seeded tabletop scenes: upright boxes, spheres and cylinders resting on a
//! common plane, each carrying a dense surface point set.

use std::f64::consts::PI;

use boxgrasp_core::geometry::{GeometryError, RigidTransform, RotationMatrix};
use boxgrasp_core::scene::SceneError;
use boxgrasp_core::{ObbDetection, Obb, Scene, ShapeClass, Vec3};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Placement attempts per object before giving up.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 500;

/// Camera-frame gravity used for every synthetic scene.
pub const SYNTH_GRAVITY: [f64; 3] = [0.0, 1.0, 0.0];

const BOX_LABELS: [&str; 4] = ["cereal box", "book", "tea box", "block"];
const SPHERE_LABELS: [&str; 3] = ["ball", "orange", "apple"];
const CYLINDER_LABELS: [&str; 3] = ["can", "cup", "bottle"];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error("cannot place object {index} of scene {scene} after {attempts} attempts")]
    CannotPlace {
        scene: String,
        index: usize,
        attempts: usize,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapeWeights {
    #[serde(rename = "box")]
    pub box_: f64,
    pub sphere: f64,
    pub cylinder: f64,
}

impl Default for ShapeWeights {
    fn default() -> Self {
        Self {
            box_: 0.6,
            sphere: 0.15,
            cylinder: 0.25,
        }
    }
}

/// Closed interval `[min, max]`.
pub type Range = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtentRanges {
    /// Per-axis box extents; z is the vertical axis.
    pub box_extents: [Range; 3],
    pub sphere_diameter: Range,
    pub cylinder_diameter: Range,
    pub cylinder_height: Range,
}

impl Default for ExtentRanges {
    fn default() -> Self {
        Self {
            box_extents: [[0.02, 0.06], [0.04, 0.08], [0.06, 0.18]],
            sphere_diameter: [0.05, 0.08],
            cylinder_diameter: [0.045, 0.075],
            cylinder_height: [0.06, 0.16],
        }
    }
}

/// Rectangle on the table plane, in camera x and z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlacementRegion {
    pub x: Range,
    pub z: Range,
    /// Camera-frame y of the table plane (gravity points along +y).
    pub table_y: f64,
}

impl Default for PlacementRegion {
    fn default() -> Self {
        Self {
            x: [-0.45, 0.45],
            z: [0.6, 1.3],
            table_y: 0.35,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub object_count: [usize; 2],
    pub shape_weights: ShapeWeights,
    pub extents: ExtentRanges,
    pub region: PlacementRegion,
    /// Minimum surface-to-surface distance between any two boxes (m).
    pub min_gap: f64,
    pub points_per_object: usize,
    pub confidence: Range,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            object_count: [1, 8],
            shape_weights: ShapeWeights::default(),
            extents: ExtentRanges::default(),
            region: PlacementRegion::default(),
            min_gap: 0.06,
            points_per_object: 256,
            confidence: [0.6, 0.99],
            seed: 0,
        }
    }
}

fn check_range(name: &str, r: &Range, positive: bool) -> Result<(), SynthError> {
    let ok = r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] && (!positive || r[0] > 0.0);
    if ok {
        Ok(())
    } else {
        Err(SynthError::InvalidSpec(format!("{name} = {r:?}")))
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let [lo, hi] = self.object_count;
        if lo < 1 || lo > hi || hi > 8 {
            return Err(SynthError::InvalidSpec(format!(
                "object_count {:?} must satisfy 1 <= min <= max <= 8",
                self.object_count
            )));
        }
        let w = &self.shape_weights;
        let weights = [w.box_, w.sphere, w.cylinder];
        if weights.iter().any(|v| !v.is_finite() || *v < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
            return Err(SynthError::InvalidSpec(format!("shape_weights {weights:?}")));
        }
        for (axis, r) in ["x", "y", "z"].iter().zip(&self.extents.box_extents) {
            check_range(&format!("box_extents.{axis}"), r, true)?;
        }
        check_range("sphere_diameter", &self.extents.sphere_diameter, true)?;
        check_range("cylinder_diameter", &self.extents.cylinder_diameter, true)?;
        check_range("cylinder_height", &self.extents.cylinder_height, true)?;
        check_range("region.x", &self.region.x, false)?;
        check_range("region.z", &self.region.z, false)?;
        check_range("confidence", &self.confidence, false)?;
        if self.confidence[0] < 0.0 || self.confidence[1] > 1.0 {
            return Err(SynthError::InvalidSpec(format!("confidence {:?}", self.confidence)));
        }
        if !self.region.table_y.is_finite() || !(self.min_gap >= 0.0 && self.min_gap.is_finite()) {
            return Err(SynthError::InvalidSpec("table_y and min_gap must be finite, min_gap >= 0".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let spec: Self = serde_json::from_str(text).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

fn uniform(rng: &mut ChaCha8Rng, r: &Range) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

/// Upright pose: object z opposes gravity, yaw `psi` about the vertical.
pub fn upright_rotation(psi: f64) -> RotationMatrix {
    let (s, c) = psi.sin_cos();
    RotationMatrix::from_row_major(&[c, -s, 0.0, 0.0, 0.0, -1.0, s, c, 0.0])
        .expect("upright rotation is orthonormal")
}

/// Upright box whose bottom face lies on the table plane, centred at
/// `(cx, cz)` on the table.
pub fn upright_obb(extents: Vec3, psi: f64, cx: f64, cz: f64, table_y: f64) -> Result<Obb, GeometryError> {
    let rotation = upright_rotation(psi);
    let centre = Vec3::new(cx, table_y - extents.z / 2.0, cz);
    let translation = centre - rotation.apply(&(extents / 2.0));
    Obb::new(RigidTransform::new(rotation, translation), extents)
}

/// Footprint circumradius used for conservative spacing.
fn footprint_radius(extents: &Vec3) -> f64 {
    extents.x.hypot(extents.y) / 2.0
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi = rng.random_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Points on the true surface of the shape, in the object frame.
fn surface_points(shape: ShapeClass, e: &Vec3, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let centre = e / 2.0;
    (0..n)
        .map(|_| match shape {
            ShapeClass::Sphere => centre + random_unit(rng) * (e.x.min(e.y).min(e.z) / 2.0),
            ShapeClass::Cylinder => {
                let r = e.x.min(e.y) / 2.0;
                let side = 2.0 * PI * r * e.z;
                let cap = PI * r * r;
                let phi = rng.random_range(0.0..2.0 * PI);
                let pick = rng.random_range(0.0..side + 2.0 * cap);
                if pick < side {
                    Vec3::new(centre.x + r * phi.cos(), centre.y + r * phi.sin(), rng.random_range(0.0..=e.z))
                } else {
                    let rho = r * rng.random::<f64>().sqrt();
                    let z = if pick < side + cap { 0.0 } else { e.z };
                    Vec3::new(centre.x + rho * phi.cos(), centre.y + rho * phi.sin(), z)
                }
            }
            _ => {
                let areas = [e.y * e.z, e.x * e.z, e.x * e.y];
                let mut pick = rng.random_range(0.0..2.0 * areas.iter().sum::<f64>());
                let mut axis = 0;
                while pick >= 2.0 * areas[axis] && axis < 2 {
                    pick -= 2.0 * areas[axis];
                    axis += 1;
                }
                let mut p = Vec3::new(
                    rng.random_range(0.0..=e.x),
                    rng.random_range(0.0..=e.y),
                    rng.random_range(0.0..=e.z),
                );
                p[axis] = if pick < areas[axis] { 0.0 } else { e[axis] };
                p
            }
        })
        .collect()
}

fn scene_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Identifier of the `index`-th scene for a seed.
pub fn scene_id(seed: u64, index: usize) -> String {
    format!("synth-{seed}-{index:04}")
}

/// First scene drawn from a `SceneSpec`.
pub fn synth_scene(spec: &SceneSpec) -> Result<Scene, SynthError> {
    synth_scene_at(spec, 0)
}

/// The `index`-th scene for the seed; every index draws from its own stream.
pub fn synth_scene_at(spec: &SceneSpec, index: usize) -> Result<Scene, SynthError> {
    spec.validate()?;
    let id = scene_id(spec.seed, index);
    let mut rng = scene_rng(spec.seed, index as u64);
    let count = rng.random_range(spec.object_count[0]..=spec.object_count[1]);
    let w = &spec.shape_weights;
    let shapes = WeightedIndex::new([w.box_, w.sphere, w.cylinder])
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let ext = &spec.extents;

    let mut placed: Vec<(f64, f64, f64)> = Vec::with_capacity(count);
    let mut objects = Vec::with_capacity(count);
    for k in 0..count {
        let (shape, extents, label) = match shapes.sample(&mut rng) {
            0 => {
                let e = Vec3::new(
                    uniform(&mut rng, &ext.box_extents[0]),
                    uniform(&mut rng, &ext.box_extents[1]),
                    uniform(&mut rng, &ext.box_extents[2]),
                );
                (ShapeClass::Box, e, BOX_LABELS[rng.random_range(0..BOX_LABELS.len())])
            }
            1 => {
                let d = uniform(&mut rng, &ext.sphere_diameter);
                (ShapeClass::Sphere, Vec3::new(d, d, d), SPHERE_LABELS[rng.random_range(0..SPHERE_LABELS.len())])
            }
            _ => {
                let d = uniform(&mut rng, &ext.cylinder_diameter);
                let h = uniform(&mut rng, &ext.cylinder_height);
                (ShapeClass::Cylinder, Vec3::new(d, d, h), CYLINDER_LABELS[rng.random_range(0..CYLINDER_LABELS.len())])
            }
        };
        let radius = footprint_radius(&extents);
        let region = &spec.region;
        let mut spot = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let cx = uniform(&mut rng, &region.x);
            let cz = uniform(&mut rng, &region.z);
            let clear = placed
                .iter()
                .all(|&(x, z, r)| (x - cx).hypot(z - cz) >= r + radius + spec.min_gap);
            if clear {
                spot = Some((cx, cz));
                break;
            }
        }
        let (cx, cz) = spot.ok_or_else(|| SynthError::CannotPlace {
            scene: id.clone(),
            index: k,
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })?;
        placed.push((cx, cz, radius));

        let psi = rng.random_range(0.0..PI);
        let obb = upright_obb(extents, psi, cx, cz, region.table_y)?;
        let points = surface_points(shape, &extents, spec.points_per_object, &mut rng)
            .iter()
            .map(|p| obb.to_camera(p))
            .collect();
        objects.push(ObbDetection {
            id: k as u64 + 1,
            label: label.to_string(),
            shape_class: shape,
            confidence: uniform(&mut rng, &spec.confidence),
            obb,
            points: Some(points),
        });
    }
    Ok(Scene::new(id, Vec3::from(SYNTH_GRAVITY), objects)?)
}

/// Exact distance between two upright boxes' footprints on the table plane.
pub fn footprint_gap(a: &Obb, b: &Obb) -> f64 {
    let corners = |o: &Obb| -> [(f64, f64); 4] {
        let e = o.extents();
        [(0.0, 0.0), (e.x, 0.0), (e.x, e.y), (0.0, e.y)].map(|(x, y)| {
            let p = o.to_camera(&Vec3::new(x, y, 0.0));
            (p.x, p.z)
        })
    };
    let (pa, pb) = (corners(a), corners(b));
    if polygons_overlap(&pa, &pb) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for i in 0..4 {
        for p in &pa {
            best = best.min(point_segment_2d(*p, pb[i], pb[(i + 1) % 4]));
        }
        for p in &pb {
            best = best.min(point_segment_2d(*p, pa[i], pa[(i + 1) % 4]));
        }
    }
    best
}

fn point_segment_2d(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

fn polygons_overlap(a: &[(f64, f64); 4], b: &[(f64, f64); 4]) -> bool {
    for poly in [a, b] {
        for i in 0..4 {
            let (p, q) = (poly[i], poly[(i + 1) % 4]);
            let n = (q.1 - p.1, p.0 - q.0);
            let project = |s: &[(f64, f64); 4]| {
                s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    let d = v.0 * n.0 + v.1 * n.1;
                    (lo.min(d), hi.max(d))
                })
            };
            let (a0, a1) = project(a);
            let (b0, b1) = project(b);
            if a1 < b0 || b1 < a0 {
                return false;
            }
        }
    }
    true
}

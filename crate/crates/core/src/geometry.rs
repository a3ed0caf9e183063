//! Frames, rigid transforms and oriented-bounding-box geometry.
//!
//! Object frames follow one convention throughout the crate: the box minimum
//! corner sits at the origin, so a box with extents `(x_l, y_l, z_l)` spans
//! `[0, x_l] x [0, y_l] x [0, z_l]` in its own frame. A [`RigidTransform`]
//! maps object-frame coordinates into the camera (or robot) frame.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Position (meters) or direction (unitless) in 3D.
pub type Vec3 = Vector3<f64>;

/// Tolerance for the orthonormality and determinant invariants.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Looser tolerance accepted for hand-written or externally produced rotations;
/// inputs inside it are re-orthonormalized.
pub const ROTATION_REPAIR_TOLERANCE: f64 = 1e-6;

const AXIS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid axes: {0}")]
    InvalidAxes(String),
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),
    #[error("invalid extents ({0}, {1}, {2}): every extent must be finite and > 0")]
    InvalidExtents(f64, f64, f64),
    #[error("non-finite vector component")]
    NonFinite,
    #[error("surface sampling needs at least 8 points, got {0}")]
    TooFewSamples(usize),
}

pub fn is_finite(v: &Vec3) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Proper rotation: orthonormal with determinant +1.
///
/// Columns are the gripper axes when used as a grasp orientation:
/// X (approach), Y (closing), Z = X x Y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Validates `m` against the rotation invariants at [`ROTATION_TOLERANCE`].
    pub fn new(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        let err = orthonormality_error(&m);
        if !m.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if err >= ROTATION_TOLERANCE {
            return Err(GeometryError::InvalidRotation(format!(
                "max |R^T R - I| = {err:e}"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() >= ROTATION_TOLERANCE {
            return Err(GeometryError::InvalidRotation(format!("det = {det}")));
        }
        Ok(Self(m))
    }

    /// Accepts a matrix whose invariants hold within [`ROTATION_REPAIR_TOLERANCE`],
    /// projecting it onto SO(3) by Gram-Schmidt when it misses the strict tolerance.
    /// Matrices that already satisfy the strict tolerance are returned bit-for-bit.
    pub fn repaired(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        if let Ok(r) = Self::new(m) {
            return Ok(r);
        }
        if !m.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let err = orthonormality_error(&m);
        let det = m.determinant();
        if err >= ROTATION_REPAIR_TOLERANCE || (det - 1.0).abs() >= ROTATION_REPAIR_TOLERANCE {
            return Err(GeometryError::InvalidRotation(format!(
                "max |R^T R - I| = {err:e}, det = {det}"
            )));
        }
        let x = m.column(0).normalize();
        let y = (m.column(1) - x * x.dot(&m.column(1))).normalize();
        let z = x.cross(&y);
        Self::new(Matrix3::from_columns(&[x, y, z]))
    }

    pub fn from_row_major(rows: &[f64; 9]) -> Result<Self, GeometryError> {
        Self::repaired(Matrix3::from_row_slice(rows))
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    /// Rotation about the z axis by `angle` radians.
    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// Rotates this frame about its own Y column by `angle` radians.
    /// The Y column is carried over unchanged.
    pub fn rotated_about_own_y(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let x = self.x_axis();
        let y = self.y_axis();
        let z = self.z_axis();
        let x_new = x * c - z * s;
        let z_new = x * s + z * c;
        Self(Matrix3::from_columns(&[x_new, y, z_new]))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn x_axis(&self) -> Vec3 {
        self.0.column(0).into_owned()
    }

    pub fn y_axis(&self) -> Vec3 {
        self.0.column(1).into_owned()
    }

    pub fn z_axis(&self) -> Vec3 {
        self.0.column(2).into_owned()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, other: &RotationMatrix) -> Self {
        Self(self.0 * other.0)
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// Max-abs entry of `R^T R - I`.
    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.0)
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }
}

fn orthonormality_error(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).amax()
}

/// Builds `R = [X, Y, X x Y]` from an approach axis and a closing axis.
pub fn rotation_from_xy(x: &Vec3, y: &Vec3) -> Result<RotationMatrix, GeometryError> {
    if !is_finite(x) || !is_finite(y) {
        return Err(GeometryError::NonFinite);
    }
    let (nx, ny) = (x.norm(), y.norm());
    if (nx - 1.0).abs() > AXIS_TOLERANCE || (ny - 1.0).abs() > AXIS_TOLERANCE {
        return Err(GeometryError::InvalidAxes(format!(
            "axes must be unit length, got |X| = {nx}, |Y| = {ny}"
        )));
    }
    let dot = x.dot(y);
    if dot.abs() >= AXIS_TOLERANCE {
        return Err(GeometryError::InvalidAxes(format!(
            "axes must be orthogonal, got X.Y = {dot:e}"
        )));
    }
    let x = x / nx;
    let y = (y - x * x.dot(y)).normalize();
    let z = x.cross(&y).normalize();
    RotationMatrix::new(Matrix3::from_columns(&[x, y, z]))
}

/// Object-to-camera rigid transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: RotationMatrix,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn new(rotation: RotationMatrix, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(RotationMatrix::identity(), Vec3::zeros())
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self::new(RotationMatrix::identity(), translation)
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation.apply(p) + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation.apply(v)
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        let t = -rt.apply(&self.translation);
        Self::new(rt, t)
    }

    pub fn compose(&self, other: &RigidTransform) -> Self {
        Self::new(
            self.rotation.compose(&other.rotation),
            self.apply(&other.translation),
        )
    }
}

/// Maps an object-frame grasp pose into the frame `t` points to.
pub fn transform_grasp(
    t: &RigidTransform,
    rotation: &RotationMatrix,
    translation: &Vec3,
) -> (RotationMatrix, Vec3) {
    (t.rotation.compose(rotation), t.apply(translation))
}

/// `sqrt(x_l^2 + y_l^2 + z_l^2)`.
pub fn diag_length(extents: &Vec3) -> Result<f64, GeometryError> {
    check_extents(extents)?;
    Ok(extents.norm())
}

pub fn check_extents(extents: &Vec3) -> Result<(), GeometryError> {
    if extents.iter().all(|e| e.is_finite() && *e > 0.0) {
        Ok(())
    } else {
        Err(GeometryError::InvalidExtents(extents.x, extents.y, extents.z))
    }
}

/// Oriented bounding box; see the module docs for the frame convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb {
    pose: RigidTransform,
    extents: Vec3,
}

impl Obb {
    pub fn new(pose: RigidTransform, extents: Vec3) -> Result<Self, GeometryError> {
        check_extents(&extents)?;
        if !is_finite(&pose.translation) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { pose, extents })
    }

    /// Box of the given extents whose object frame coincides with the camera frame.
    pub fn axis_aligned(extents: Vec3) -> Result<Self, GeometryError> {
        Self::new(RigidTransform::identity(), extents)
    }

    pub fn pose(&self) -> &RigidTransform {
        &self.pose
    }

    pub fn extents(&self) -> &Vec3 {
        &self.extents
    }

    pub fn half_extents(&self) -> Vec3 {
        self.extents * 0.5
    }

    pub fn diag_length(&self) -> f64 {
        self.extents.norm()
    }

    /// Box center in the camera frame (the COG proxy).
    pub fn center(&self) -> Vec3 {
        self.pose.apply(&self.half_extents())
    }

    /// Maps a camera-frame point into the object frame.
    pub fn to_object(&self, p: &Vec3) -> Vec3 {
        self.pose.rotation.transpose().apply(&(p - self.pose.translation))
    }

    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        self.pose.apply(p)
    }

    /// Euclidean distance from a camera-frame point to the solid box (0 inside).
    pub fn distance_to_point(&self, p: &Vec3) -> f64 {
        let q = self.to_object(p);
        let mut acc = 0.0;
        for i in 0..3 {
            let excess = if q[i] < 0.0 {
                -q[i]
            } else if q[i] > self.extents[i] {
                q[i] - self.extents[i]
            } else {
                0.0
            };
            acc += excess * excess;
        }
        acc.sqrt()
    }

    /// Distance from a camera-frame point to the box boundary surface.
    pub fn distance_to_surface(&self, p: &Vec3) -> f64 {
        let outside = self.distance_to_point(p);
        if outside > 0.0 {
            return outside;
        }
        let q = self.to_object(p);
        (0..3)
            .map(|i| q[i].min(self.extents[i] - q[i]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: &Vec3, tolerance: f64) -> bool {
        let q = self.to_object(p);
        (0..3).all(|i| q[i] >= -tolerance && q[i] <= self.extents[i] + tolerance)
    }
}

/// The 8 box corners in the camera frame, binary-counting order over
/// `(x, y, z)` with z varying fastest.
pub fn obb_corners(obb: &Obb) -> [Vec3; 8] {
    let e = obb.extents();
    std::array::from_fn(|i| {
        let local = Vec3::new(
            if i & 4 != 0 { e.x } else { 0.0 },
            if i & 2 != 0 { e.y } else { 0.0 },
            if i & 1 != 0 { e.z } else { 0.0 },
        );
        obb.to_camera(&local)
    })
}

/// Deterministic stratified surface sampling.
///
/// Points come from a surface lattice with per-axis subdivisions proportional
/// to the extents (the largest lattice that fits in `n`), corners first. Any
/// remaining budget is spread over the six faces in proportion to face area
/// using a 2D Halton sequence on each face. For a cube, `n = 6k^2 + 2` yields
/// exactly the surface of a `(k+1)^3` grid.
pub fn sample_obb_surface(obb: &Obb, n: usize) -> Result<Vec<Vec3>, GeometryError> {
    if n < 8 {
        return Err(GeometryError::TooFewSamples(n));
    }
    let e = *obb.extents();
    let max_extent = e.max();
    let divisions = |scale: usize| -> [usize; 3] {
        std::array::from_fn(|i| ((e[i] / max_extent * scale as f64).floor() as usize).max(1))
    };
    let lattice_count = |k: [usize; 3]| -> usize {
        let total = (k[0] + 1) * (k[1] + 1) * (k[2] + 1);
        let interior = (k[0] - 1) * (k[1] - 1) * (k[2] - 1);
        total - interior
    };

    let mut k = [1, 1, 1];
    let mut scale = 2;
    loop {
        let candidate = divisions(scale);
        if lattice_count(candidate) > n {
            break;
        }
        k = candidate;
        scale += 1;
    }

    let mut local = Vec::with_capacity(n);
    for i in 0..8 {
        local.push(Vec3::new(
            if i & 4 != 0 { e.x } else { 0.0 },
            if i & 2 != 0 { e.y } else { 0.0 },
            if i & 1 != 0 { e.z } else { 0.0 },
        ));
    }
    for i in 0..=k[0] {
        for j in 0..=k[1] {
            for l in 0..=k[2] {
                let idx = [i, j, l];
                let on_boundary = (0..3).any(|a| idx[a] == 0 || idx[a] == k[a]);
                let is_corner = (0..3).all(|a| idx[a] == 0 || idx[a] == k[a]);
                if on_boundary && !is_corner {
                    local.push(Vec3::new(
                        e.x * i as f64 / k[0] as f64,
                        e.y * j as f64 / k[1] as f64,
                        e.z * l as f64 / k[2] as f64,
                    ));
                }
            }
        }
    }

    let remaining = n - local.len();
    if remaining > 0 {
        // faces: (normal axis, side), ordered -x, +x, -y, +y, -z, +z
        let faces: Vec<(usize, bool)> = (0..3).flat_map(|a| [(a, false), (a, true)]).collect();
        let areas: Vec<f64> = faces
            .iter()
            .map(|&(a, _)| e[(a + 1) % 3] * e[(a + 2) % 3])
            .collect();
        let quotas = largest_remainder(&areas, remaining);
        for (&(axis, high), &quota) in faces.iter().zip(&quotas) {
            let (u_axis, v_axis) = ((axis + 1) % 3, (axis + 2) % 3);
            for j in 1..=quota {
                let mut p = Vec3::zeros();
                p[axis] = if high { e[axis] } else { 0.0 };
                p[u_axis] = e[u_axis] * radical_inverse(j, 2);
                p[v_axis] = e[v_axis] * radical_inverse(j, 3);
                local.push(p);
            }
        }
    }
    debug_assert_eq!(local.len(), n);
    Ok(local.iter().map(|p| obb.to_camera(p)).collect())
}

/// Splits `total` into integer shares proportional to `weights`.
fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut shares: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut left = total - shares.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        shares[i] += 1;
        left -= 1;
    }
    shares
}

fn radical_inverse(mut index: usize, base: usize) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += f * (index % base) as f64;
        index /= base;
        f /= base as f64;
    }
    result
}

/// Serialized rotation/translation pair used by the JSON schemas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

impl From<&RigidTransform> for PoseRecord {
    fn from(t: &RigidTransform) -> Self {
        Self {
            rotation: t.rotation.to_row_major(),
            translation: [t.translation.x, t.translation.y, t.translation.z],
        }
    }
}

impl TryFrom<&PoseRecord> for RigidTransform {
    type Error = GeometryError;

    fn try_from(p: &PoseRecord) -> Result<Self, Self::Error> {
        let translation = Vec3::from(p.translation);
        if !is_finite(&translation) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self::new(RotationMatrix::from_row_major(&p.rotation)?, translation))
    }
}
